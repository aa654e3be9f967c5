#include "csdvs/detector.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "csdvs/error.hpp"
#include "csdvs/parallel.hpp"

namespace csdvs {
namespace {

struct Ramp {
  double p0;
  double p1;
  std::int64_t t0;  // ns
  std::int64_t t1;  // ns

  double at(std::int64_t k) const {
    return std::lerp(p0, p1, static_cast<double>(k - t0) / static_cast<double>(t1 - t0));
  }
};

// First tick k in [lo, t1] with pred(ramp.at(k)). pred must be monotone along
// the ramp and true at t1.
template <typename Pred>
std::int64_t first_tick(const Ramp& ramp, std::int64_t lo, double level, Pred pred) {
  const double span = static_cast<double>(ramp.t1 - ramp.t0);
  double f = (level - ramp.p0) / (ramp.p1 - ramp.p0);
  std::int64_t k = lo;
  if (std::isfinite(f)) {
    double guess = std::ceil(static_cast<double>(ramp.t0) + f * span);
    k = static_cast<std::int64_t>(std::clamp(guess, static_cast<double>(lo), static_cast<double>(ramp.t1)));
  }
  while (k > lo && pred(ramp.at(k - 1))) --k;
  while (k < ramp.t1 && !pred(ramp.at(k))) ++k;
  return k;
}

double sample_threshold(std::mt19937_64& rng, double nominal, double sigma) {
  if (sigma == 0.0) return nominal;
  std::normal_distribution<double> dist(nominal, sigma);
  const double floor = nominal / 4.0;
  for (;;) {
    double v = dist(rng);
    if (v >= floor) return v;
  }
}

}  // namespace

ThresholdMap ThresholdMap::generate(int width, int height, double nominal, double sigma,
                                    std::uint64_t seed) {
  if (!(nominal > 0.0) || !std::isfinite(nominal)) throw ConfigError("threshold must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("threshold sigma must be >= 0");
  ThresholdMap map;
  map.on = PixelGrid(width, height);
  map.off = PixelGrid(width, height);
  map.nominal = nominal;
  map.sigma = sigma;
  map.seed = seed;
  std::mt19937_64 rng(seed);
  for (double& v : map.on) v = sample_threshold(rng, nominal, sigma);
  for (double& v : map.off) v = sample_threshold(rng, nominal, sigma);
  return map;
}

ThresholdMap ThresholdMap::uniform(int width, int height, double on, double off) {
  if (!(on > 0.0) || !(off > 0.0)) throw ConfigError("thresholds must be positive");
  ThresholdMap map;
  map.on = PixelGrid(width, height, on);
  map.off = PixelGrid(width, height, off);
  map.nominal = on;
  return map;
}

DetectorState DetectorState::init(const PixelGrid& first_diff, std::int64_t t_us) {
  for (double v : first_diff)
    if (!std::isfinite(v)) throw DataError("non-finite difference in the first frame");
  return {first_diff, first_diff, t_us};
}

std::vector<Event> detect_frame(DetectorState& state, const PixelGrid& diff, std::int64_t t_us,
                                const ThresholdMap& thresholds, ResetMode mode) {
  if (!diff.same_shape(state.ref) || !thresholds.on.same_shape(diff) ||
      !thresholds.off.same_shape(diff))
    throw DataError("detector inputs differ in size");
  if (t_us <= state.prev_t_us)
    throw DataError("frame time " + std::to_string(t_us) + " us does not advance past " +
                    std::to_string(state.prev_t_us) + " us");
  const int w = diff.width();
  const int h = diff.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!std::isfinite(diff(x, y)))
        throw DataError("non-finite difference at pixel (" + std::to_string(x) + ", " +
                        std::to_string(y) + ")");

  const std::int64_t t0_ns = state.prev_t_us * 1000;
  const std::int64_t t1_ns = t_us * 1000;
  std::vector<std::vector<Event>> rows(static_cast<std::size_t>(h));
  const int workers = worker_count();

#pragma omp parallel for schedule(static) num_threads(workers) if (workers > 1)
  for (int y = 0; y < h; ++y) {
    auto& out = rows[static_cast<std::size_t>(y)];
    auto ref_row = state.ref.row(y);
    auto prev_row = state.prev_diff.row(y);
    auto cur_row = diff.row(y);
    auto on_row = thresholds.on.row(y);
    auto off_row = thresholds.off.row(y);
    for (int x = 0; x < w; ++x) {
      const Ramp ramp{prev_row[x], cur_row[x], t0_ns, t1_ns};
      const double th_on = on_row[x];
      const double th_off = off_row[x];
      double ref = ref_row[x];
      std::int64_t lo = t0_ns + 1;
      auto emit = [&](std::int64_t tick, Polarity p) {
        out.push_back({tick / 1000, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), p});
      };

      if (ramp.p1 - ref > th_on) {
        if (mode == ResetMode::Ladder) {
          while (ramp.p1 - ref > th_on) {
            const double r = ref;
            lo = first_tick(ramp, lo, r + th_on, [&](double v) { return v - r > th_on; });
            emit(lo, Polarity::On);
            ref += th_on;
          }
        } else {
          const double r = ref;
          emit(first_tick(ramp, lo, r + th_on, [&](double v) { return v - r > th_on; }), Polarity::On);
          ref = ramp.p1;
        }
      } else if (ref - ramp.p1 > th_off) {
        if (mode == ResetMode::Ladder) {
          while (ref - ramp.p1 > th_off) {
            const double r = ref;
            lo = first_tick(ramp, lo, r - th_off, [&](double v) { return r - v > th_off; });
            emit(lo, Polarity::Off);
            ref -= th_off;
          }
        } else {
          const double r = ref;
          emit(first_tick(ramp, lo, r - th_off, [&](double v) { return r - v > th_off; }), Polarity::Off);
          ref = ramp.p1;
        }
      }
      ref_row[x] = ref;
    }
  }

  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  std::vector<Event> events;
  events.reserve(total);
  for (auto& r : rows) events.insert(events.end(), r.begin(), r.end());
  std::stable_sort(events.begin(), events.end());

  state.prev_diff = diff;
  state.prev_t_us = t_us;
  return events;
}

}  // namespace csdvs
