#pragma once

#include <optional>
#include <utility>

#include "csdvs/grid.hpp"
#include "csdvs/videoio.hpp"

namespace csdvs {

enum class StimulusKind { FlashingSpot, GradientPair, Flicker };
enum class FlickerWaveform { Square, Sine };

struct SpotGeometry {
  double radius = 16.0;
  // 1-px linear ramp at the rim instead of a hard edge.
  bool antialias = false;
};

// Two flat-topped bumps with raised-cosine flanks. `*_width` is the support
// of the raised-cosine part: with plateau == 0 each bump is a plain raised
// cosine of that width (FWHM = width / 2).
struct GradientGeometry {
  double gradual_width = 40.0;
  double sharp_width = 4.0;
  double plateau = 0.0;
  double speed = 32.0;  // px/s, +x, wraps around
};

struct FlickerGeometry {
  double frequency = 20.0;  // Hz
  FlickerWaveform waveform = FlickerWaveform::Sine;
  // Multiplicand for the illumination waveform; the built-in test card is
  // used when empty.
  std::optional<PixelGrid> base;
};

struct StimulusSpec {
  StimulusKind kind = StimulusKind::FlashingSpot;
  int width = 128;
  int height = 128;
  double duration = 1.0;  // s
  double fps = 500.0;
  double contrast = 1.5;  // intensity ratio
  double gray = 0.4;      // background level g0
  SpotGeometry spot;
  GradientGeometry gradient;
  FlickerGeometry flicker;

  std::size_t frame_count() const;
  // Throws ConfigError for anything the generators cannot honour.
  void validate() const;
};

FrameSequence generate(const StimulusSpec& spec);
FrameSequence generate_flashing_spot(const StimulusSpec& spec);
FrameSequence generate_gradient_pair(const StimulusSpec& spec);
FrameSequence generate_flicker(const StimulusSpec& spec);

/// Spot centre in pixel coordinates (centre of the frame).
std::pair<double, double> spot_center(const StimulusSpec& spec);

/// Centres (gradual, sharp) of the two bumps at time t, in [0, width).
std::pair<double, double> bump_centers(const StimulusSpec& spec, double t);

/// Illumination multiplier m(t) in [1/contrast, contrast].
double flicker_modulation(const StimulusSpec& spec, double t);

// Built-in flicker base: uniform left half, 8-px checkerboard right half.
// Levels are scaled so that base * contrast stays <= 1.
PixelGrid flicker_test_card(int width, int height, double contrast);

}  // namespace csdvs
