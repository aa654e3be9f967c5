#include "csdvs/photoreceptor.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "csdvs/error.hpp"
#include "csdvs/parallel.hpp"

namespace csdvs {
namespace {

void require_finite(const PixelGrid& frame) {
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      if (!std::isfinite(frame(x, y)))
        throw DataError("non-finite photoreceptor input at pixel (" + std::to_string(x) + ", " +
                        std::to_string(y) + ")");
}

}  // namespace

Photoreceptor::Photoreceptor(const PixelGrid& first_log_frame, double cutoff_hz)
    : v_p_(first_log_frame), cutoff_hz_(cutoff_hz) {
  if (!(cutoff_hz > 0.0) || !std::isfinite(cutoff_hz))
    throw ConfigError("photoreceptor cutoff must be positive and finite (use bypass mode instead)");
  require_finite(first_log_frame);
  tau_ = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
}

Photoreceptor Photoreceptor::bypass(const PixelGrid& first_log_frame) {
  require_finite(first_log_frame);
  Photoreceptor pr;
  pr.v_p_ = first_log_frame;
  pr.bypass_ = true;
  return pr;
}

void Photoreceptor::step(const PixelGrid& log_frame, double dt) {
  if (!log_frame.same_shape(v_p_)) throw DataError("photoreceptor input changed size");
  if (!(dt > 0.0)) throw ConfigError("photoreceptor step needs dt > 0");
  require_finite(log_frame);
  if (bypass_) {
    v_p_ = log_frame;
    return;
  }
  const double gain = -std::expm1(-dt / tau_);
  const int h = v_p_.height();
  const int w = v_p_.width();
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (worker_count() > 1)
  for (int y = 0; y < h; ++y) {
    auto out = v_p_.row(y);
    auto in = log_frame.row(y);
    for (int x = 0; x < w; ++x) out[x] += gain * (in[x] - out[x]);
  }
}

}  // namespace csdvs
