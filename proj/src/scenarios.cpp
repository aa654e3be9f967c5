#include "csdvs/scenarios.hpp"

#include <cmath>
#include <cstdio>

#include "csdvs/error.hpp"

namespace csdvs {
namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + key + ": '" + v + "'");
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double wrapped_distance(double a, double b, double period) {
  double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

}  // namespace

StimulusSpec spot_scenario() {
  StimulusSpec s;
  s.kind = StimulusKind::FlashingSpot;
  return s;
}

StimulusSpec gradient_scenario() {
  StimulusSpec s;
  s.kind = StimulusKind::GradientPair;
  s.width = 512;
  s.height = 32;
  s.contrast = 4.0;
  s.gray = 0.2;
  s.gradient.gradual_width = 160.0;
  s.gradient.sharp_width = 8.0;
  s.gradient.plateau = 64.0;
  s.gradient.speed = 64.0;
  return s;
}

StimulusSpec flicker_scenario() {
  StimulusSpec s;
  s.kind = StimulusKind::Flicker;
  s.duration = 0.5;
  s.contrast = 2.0;
  s.flicker.frequency = 20.0;
  s.flicker.waveform = FlickerWaveform::Sine;
  return s;
}

std::string to_string(StimulusKind kind) {
  switch (kind) {
    case StimulusKind::FlashingSpot: return "flashing-spot";
    case StimulusKind::GradientPair: return "gradient-pair";
    case StimulusKind::Flicker: return "flicker";
  }
  return "?";
}

StimulusKind parse_stimulus_kind(const std::string& s) {
  if (s == "flashing-spot" || s == "flashing_spot" || s == "spot") return StimulusKind::FlashingSpot;
  if (s == "gradient-pair" || s == "gradient_pair" || s == "gradient") return StimulusKind::GradientPair;
  if (s == "flicker") return StimulusKind::Flicker;
  throw ConfigError("unknown stimulus kind '" + s + "'");
}

std::string to_string(FlickerWaveform w) { return w == FlickerWaveform::Sine ? "sine" : "square"; }

FlickerWaveform parse_waveform(const std::string& s) {
  if (s == "sine") return FlickerWaveform::Sine;
  if (s == "square") return FlickerWaveform::Square;
  throw ConfigError("unknown waveform '" + s + "'");
}

std::string stimulus_to_text(const StimulusSpec& s) {
  std::string out;
  auto kv = [&](const char* k, const std::string& v) { out += std::string(k) + "=" + v + "\n"; };
  kv("kind", to_string(s.kind));
  kv("width", std::to_string(s.width));
  kv("height", std::to_string(s.height));
  kv("duration", num(s.duration));
  kv("fps", num(s.fps));
  kv("contrast", num(s.contrast));
  kv("gray", num(s.gray));
  switch (s.kind) {
    case StimulusKind::FlashingSpot:
      kv("radius", num(s.spot.radius));
      kv("antialias", s.spot.antialias ? "1" : "0");
      break;
    case StimulusKind::GradientPair:
      kv("gradual_width", num(s.gradient.gradual_width));
      kv("sharp_width", num(s.gradient.sharp_width));
      kv("plateau", num(s.gradient.plateau));
      kv("speed", num(s.gradient.speed));
      break;
    case StimulusKind::Flicker:
      kv("freq", num(s.flicker.frequency));
      kv("waveform", to_string(s.flicker.waveform));
      kv("base", s.flicker.base ? "custom" : "test-card");
      break;
  }
  return out;
}

StimulusSpec stimulus_from_values(const std::map<std::string, std::string>& values) {
  StimulusSpec s;
  for (const auto& [k, v] : values) {
    if (k == "kind") s.kind = parse_stimulus_kind(v);
    else if (k == "width") s.width = static_cast<int>(to_double(k, v));
    else if (k == "height") s.height = static_cast<int>(to_double(k, v));
    else if (k == "duration") s.duration = to_double(k, v);
    else if (k == "fps") s.fps = to_double(k, v);
    else if (k == "contrast") s.contrast = to_double(k, v);
    else if (k == "gray") s.gray = to_double(k, v);
    else if (k == "radius") s.spot.radius = to_double(k, v);
    else if (k == "antialias") s.spot.antialias = to_double(k, v) != 0.0;
    else if (k == "gradual_width") s.gradient.gradual_width = to_double(k, v);
    else if (k == "sharp_width") s.gradient.sharp_width = to_double(k, v);
    else if (k == "plateau") s.gradient.plateau = to_double(k, v);
    else if (k == "speed") s.gradient.speed = to_double(k, v);
    else if (k == "freq") s.flicker.frequency = to_double(k, v);
    else if (k == "waveform") s.flicker.waveform = parse_waveform(v);
    else if (k == "base") continue;
    else throw ConfigError("unknown stimulus key '" + k + "'");
  }
  return s;
}

std::vector<RegionMask> scenario_masks(const StimulusSpec& spec, double L) {
  std::vector<RegionMask> masks;
  const int w = spec.width, h = spec.height;
  auto keep = [&](RegionMask m) {
    for (unsigned char v : m.mask)
      if (v) {
        masks.push_back(std::move(m));
        return;
      }
  };
  switch (spec.kind) {
    case StimulusKind::FlashingSpot: {
      auto [cx, cy] = spot_center(spec);
      const double r = spec.spot.radius;
      keep(annulus_mask("edge_annulus", w, h, cx, cy, r - 2 * L, r + 2 * L));
      if (r - L > 0) keep(disc_mask("interior", w, h, cx, cy, r - L));
      keep(outside_mask("background", w, h, cx, cy, r + 2 * L));
      break;
    }
    case StimulusKind::Flicker: {
      int split = w / 2;
      int uniform_end = static_cast<int>(std::floor(split - 3 * L));
      if (uniform_end > 0) keep(columns_mask("uniform", w, h, 0, uniform_end));
      keep(columns_mask("textured", w, h, split, w));
      break;
    }
    case StimulusKind::GradientPair:
      break;
  }
  return masks;
}

BumpCounts attribute_bumps(const EventStream& stream, const StimulusSpec& spec, std::int64_t t0_us) {
  BumpCounts c;
  const double period = spec.width;
  for (const Event& e : stream.events) {
    auto [g, s] = bump_centers(spec, static_cast<double>(e.t_us - t0_us) * 1e-6);
    if (wrapped_distance(e.x, g, period) <= wrapped_distance(e.x, s, period)) ++c.gradual;
    else ++c.sharp;
  }
  return c;
}

}  // namespace csdvs
