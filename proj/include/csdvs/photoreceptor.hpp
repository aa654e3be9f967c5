#pragma once

#include "csdvs/grid.hpp"

namespace csdvs {

/// First-order low-pass photoreceptor on log intensity.
///
/// The output is the centre signal of the pixel; the inverted copy that drives
/// the surround is taken as its exact negative and never materialised.
class Photoreceptor {
 public:
  /// Starts at steady state on `first_log_frame`. cutoff_hz must be positive
  /// and finite; use bypass() for an infinitely fast photoreceptor.
  Photoreceptor(const PixelGrid& first_log_frame, double cutoff_hz);

  /// Output follows the input exactly.
  static Photoreceptor bypass(const PixelGrid& first_log_frame);

  /// Exact exponential update over `dt` seconds with the input held constant:
  /// v += (1 - exp(-dt / tau)) * (input - v).
  void step(const PixelGrid& log_frame, double dt);

  const PixelGrid& output() const { return v_p_; }
  bool bypassed() const { return bypass_; }
  double cutoff_hz() const { return cutoff_hz_; }
  /// 1 / (2 pi f_3dB) in seconds; 0 in bypass mode.
  double time_constant() const { return tau_; }

 private:
  Photoreceptor() = default;

  PixelGrid v_p_;
  double cutoff_hz_ = 0.0;
  double tau_ = 0.0;
  bool bypass_ = false;
};

}  // namespace csdvs
