#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace csdvs {

/// Physical surround parameters.
struct DesignPoint {
  double R = 10e3;   // lateral resistance, ohm
  double C = 1e-12;  // node capacitance, F
  double L = 10.0;   // space constant, pixels
  double U_T = 0.025;  // thermal voltage, V

  void validate() const;
};

struct DesignResult {
  double G = 0.0;           // transverse conductance 1 / (R L^2), S
  double I_G = 0.0;         // bias current U_T G, A
  double tau = 0.0;         // C / G = R C L^2, s
  double f_3db = 0.0;       // 1 / (2 pi tau), Hz
  double array_bias = 0.0;  // n_pixels * I_G, A
};

DesignResult evaluate(const DesignPoint& point, std::uint64_t n_pixels = 1);

/// Space constant implied by a bias current: sqrt(U_T / (R I_G)).
double space_constant_from_bias(double R, double I_G, double U_T);

/// start:step:stop, inclusive of stop (within 1e-9 of a step).
struct SweepRange {
  double start = 0.0;
  double step = 1.0;
  double stop = 0.0;

  static SweepRange single(double v) { return {v, 1.0, v}; }
  static SweepRange parse(const std::string& text);
  std::vector<double> values() const;
};

struct SweepSpec {
  SweepRange R = SweepRange::single(10e3);
  SweepRange C = SweepRange::single(1e-12);
  SweepRange L = SweepRange::single(10.0);
  SweepRange n_pixels = SweepRange::single(1.0);
  double U_T = 0.025;
};

struct SweepRow {
  DesignPoint point;
  std::uint64_t n_pixels = 1;
  DesignResult result;
};

inline constexpr std::size_t kMaxSweepPoints = 1'000'000;

// Cartesian product in R, C, L, n_pixels order (n_pixels fastest). More than
// kMaxSweepPoints rows is a ConfigError.
std::vector<SweepRow> sweep(const SweepSpec& spec);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string format_design(const DesignPoint& point, std::uint64_t n_pixels, const DesignResult& r);

}  // namespace csdvs
