#pragma once

#include <cstdint>
#include <vector>

#include "csdvs/grid.hpp"
#include "csdvs/videoio.hpp"

namespace csdvs {

/// Per-pixel ON/OFF thresholds in natural-log units.
struct ThresholdMap {
  PixelGrid on;
  PixelGrid off;
  double nominal = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  // Normal(nominal, sigma) truncated below at nominal / 4 (rejection
  // sampling), ON map first then OFF map, row-major, from a mt19937_64 seeded
  // with `seed`.
  static ThresholdMap generate(int width, int height, double nominal, double sigma,
                               std::uint64_t seed);
  static ThresholdMap uniform(int width, int height, double on, double off);
};

enum class ResetMode {
  Ladder,    // reference advances by one threshold per event
  Snapshot,  // at most one event per interval, reference jumps to the new value
};

struct DetectorState {
  PixelGrid ref;        // memorised difference at the last event
  PixelGrid prev_diff;  // difference at prev_t_us
  std::int64_t prev_t_us = 0;

  // Reference starts at the first difference so nothing fires at start-up.
  static DetectorState init(const PixelGrid& first_diff, std::int64_t t_us);
};

// Emits the threshold crossings of `diff` since the previous call.
//
// Each pixel's difference is taken to move linearly from prev_diff to diff
// over [prev_t, t], sampled on a 1 ns grid as
//   std::lerp(p0, p1, double(k - t0_ns) / double(t1_ns - t0_ns)).
// An ON event fires at the first tick k where value - ref > theta_on (strict),
// after which ref += theta_on and the search continues from the same tick; OFF
// is symmetric. Event time is floor(k / 1000) us. The returned events are
// sorted by (t, y, x, polarity).
std::vector<Event> detect_frame(DetectorState& state, const PixelGrid& diff, std::int64_t t_us,
                                const ThresholdMap& thresholds,
                                ResetMode mode = ResetMode::Ladder);

}  // namespace csdvs
