#include "csdvs/stimgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "csdvs/error.hpp"

namespace csdvs {
namespace {

constexpr int kCheckerSize = 8;

// Signed distance from `c` to pixel column `x` on a ring of `width` columns.
double wrapped_offset(double x, double c, int width) {
  double d = std::fmod(x - c, static_cast<double>(width));
  if (d < -width / 2.0) d += width;
  if (d >= width / 2.0) d -= width;
  return d;
}

double bump_profile(double offset, double plateau, double width) {
  double d = std::abs(offset) - plateau / 2.0;
  double edge = width / 2.0;
  if (d <= 0.0) return 1.0;
  if (d >= edge) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * d / edge));
}

FrameSequence empty_sequence(const StimulusSpec& spec) {
  FrameSequence seq;
  seq.width = spec.width;
  seq.height = spec.height;
  std::size_t n = spec.frame_count();
  seq.frames.reserve(n);
  seq.timestamps_us.reserve(n);
  for (std::size_t k = 0; k < n; ++k) seq.timestamps_us.push_back(frame_timestamp_us(k, spec.fps));
  return seq;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

std::size_t StimulusSpec::frame_count() const {
  return static_cast<std::size_t>(std::llround(duration * fps));
}

void StimulusSpec::validate() const {
  require(width >= 8 && height >= 8, "stimulus must be at least 8x8 pixels");
  require(fps > 0.0 && std::isfinite(fps), "fps must be positive");
  require(duration > 0.0 && std::isfinite(duration), "duration must be positive");
  require(contrast > 1.0 && std::isfinite(contrast), "contrast must be > 1");
  require(gray > 0.0 && gray <= 1.0, "gray level must lie in (0, 1]");

  switch (kind) {
    case StimulusKind::FlashingSpot:
      require(gray * contrast <= 1.0, "gray * contrast exceeds full scale");
      require(spot.radius > 0.0 && spot.radius < std::min(width, height) / 2.0,
              "spot radius must be positive and below half the frame size");
      break;
    case StimulusKind::GradientPair: {
      const auto& g = gradient;
      require(gray * contrast <= 1.0, "gray * contrast exceeds full scale");
      require(g.gradual_width > 0.0 && g.sharp_width > 0.0 && g.plateau >= 0.0,
              "bump widths must be positive");
      double wide = std::max(g.gradual_width, g.sharp_width);
      double narrow = std::min(g.gradual_width, g.sharp_width);
      require(wide >= 4.0 * narrow, "bump widths must differ by at least 4x");
      require(std::isfinite(g.speed), "bump speed must be finite");
      double reach = g.plateau + (g.gradual_width + g.sharp_width) / 2.0;
      require(reach < width / 2.0, "bumps overlap at t=0");
      break;
    }
    case StimulusKind::Flicker: {
      const auto& f = flicker;
      require(f.frequency > 0.0, "flicker frequency must be positive");
      require(f.frequency < fps / 2.0, "flicker frequency must be below fps/2 (aliasing)");
      if (f.base) {
        require(f.base->width() == width && f.base->height() == height,
                "flicker base image does not match the stimulus size");
        for (double v : *f.base)
          require(v > 0.0 && v * contrast <= 1.0,
                  "flicker base must lie in (0, 1/contrast] so that every frame stays in (0, 1]");
      }
      break;
    }
  }
}

FrameSequence generate(const StimulusSpec& spec) {
  switch (spec.kind) {
    case StimulusKind::FlashingSpot: return generate_flashing_spot(spec);
    case StimulusKind::GradientPair: return generate_gradient_pair(spec);
    case StimulusKind::Flicker: return generate_flicker(spec);
  }
  throw ConfigError("unknown stimulus kind");
}

std::pair<double, double> spot_center(const StimulusSpec& spec) {
  return {(spec.width - 1) / 2.0, (spec.height - 1) / 2.0};
}

FrameSequence generate_flashing_spot(const StimulusSpec& spec) {
  if (spec.kind != StimulusKind::FlashingSpot) throw ConfigError("spec is not a flashing spot");
  spec.validate();
  FrameSequence seq = empty_sequence(spec);
  const std::size_t n = spec.frame_count();
  const double g0 = spec.gray;
  // gray, bright, gray, dark, gray; equal-length phases.
  const double levels[5] = {g0, g0 * spec.contrast, g0, g0 / spec.contrast, g0};

  // Per-pixel spot coverage in [0, 1], shared by every frame.
  auto [cx, cy] = spot_center(spec);
  Grid<double> coverage(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      double r = std::hypot(x - cx, y - cy);
      coverage(x, y) = spec.spot.antialias ? std::clamp(spec.spot.radius + 0.5 - r, 0.0, 1.0)
                                           : (r <= spec.spot.radius ? 1.0 : 0.0);
    }

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t phase = std::min<std::size_t>(4, (5 * k) / n);
    double level = levels[phase];
    PixelGrid frame(spec.width, spec.height, g0);
    for (std::size_t i = 0; i < frame.size(); ++i)
      if (coverage[i] > 0.0) frame[i] = g0 + coverage[i] * (level - g0);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::pair<double, double> bump_centers(const StimulusSpec& spec, double t) {
  double w = spec.width;
  double shift = spec.gradient.speed * t;
  auto wrap = [w](double c) {
    double r = std::fmod(c, w);
    return r < 0.0 ? r + w : r;
  };
  // Integer start positions so that frame 0 samples both peaks exactly.
  return {wrap(std::floor(w / 4.0) + shift), wrap(std::floor(3.0 * w / 4.0) + shift)};
}

FrameSequence generate_gradient_pair(const StimulusSpec& spec) {
  if (spec.kind != StimulusKind::GradientPair) throw ConfigError("spec is not a gradient pair");
  spec.validate();
  FrameSequence seq = empty_sequence(spec);
  const auto& g = spec.gradient;
  const double amp = spec.gray * (spec.contrast - 1.0);

  std::vector<double> row(static_cast<std::size_t>(spec.width));
  for (std::size_t k = 0; k < spec.frame_count(); ++k) {
    auto [c_gradual, c_sharp] = bump_centers(spec, static_cast<double>(k) / spec.fps);
    for (int x = 0; x < spec.width; ++x) {
      double b = bump_profile(wrapped_offset(x, c_gradual, spec.width), g.plateau, g.gradual_width) +
                 bump_profile(wrapped_offset(x, c_sharp, spec.width), g.plateau, g.sharp_width);
      row[static_cast<std::size_t>(x)] = spec.gray + amp * b;
    }
    PixelGrid frame(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) std::copy(row.begin(), row.end(), frame.row(y).begin());
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

double flicker_modulation(const StimulusSpec& spec, double t) {
  double s = std::sin(2.0 * std::numbers::pi * spec.flicker.frequency * t);
  if (spec.flicker.waveform == FlickerWaveform::Square)
    return s >= 0.0 ? spec.contrast : 1.0 / spec.contrast;
  return std::pow(spec.contrast, s);
}

PixelGrid flicker_test_card(int width, int height, double contrast) {
  const double bright = 1.0 / contrast;
  const double dark = 0.01 / contrast;
  const double uniform = 0.5 / contrast;
  PixelGrid card(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (x < width / 2) {
        card(x, y) = uniform;
      } else {
        bool on = ((x / kCheckerSize) + (y / kCheckerSize)) % 2 == 0;
        card(x, y) = on ? bright : dark;
      }
    }
  return card;
}

FrameSequence generate_flicker(const StimulusSpec& spec) {
  if (spec.kind != StimulusKind::Flicker) throw ConfigError("spec is not a flicker stimulus");
  spec.validate();
  FrameSequence seq = empty_sequence(spec);
  const PixelGrid base =
      spec.flicker.base ? *spec.flicker.base : flicker_test_card(spec.width, spec.height, spec.contrast);
  for (std::size_t k = 0; k < spec.frame_count(); ++k) {
    double m = flicker_modulation(spec, static_cast<double>(k) / spec.fps);
    PixelGrid frame(spec.width, spec.height);
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = std::min(1.0, base[i] * m);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace csdvs
