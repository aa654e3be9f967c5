#include "csdvs/surround.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "csdvs/error.hpp"
#include "csdvs/parallel.hpp"

namespace csdvs {
namespace {

struct ResidualSums {
  double sum_sq = 0.0;
  double sum = 0.0;
};

// Sum of (x_j - x_i) over the neighbours of column i; rows outside the array
// are null. The difference form keeps uniform fields exact and avoids
// cancellation against the large diagonal when shift is small.
inline double neighbour_pull(const double* up, const double* mid, const double* down, int i, int w,
                             int& deg) {
  const double c = mid[i];
  double s = 0.0;
  deg = 0;
  if (i > 0) s += mid[i - 1] - c, ++deg;
  if (i + 1 < w) s += mid[i + 1] - c, ++deg;
  if (up) s += up[i] - c, ++deg;
  if (down) s += down[i] - c, ++deg;
  return s;
}

ResidualSums residual_sums(double shift, const PixelGrid& rhs, const PixelGrid& x,
                           std::vector<ResidualSums>& rows, int workers) {
  const int w = x.width();
  const int h = x.height();
#pragma omp parallel for schedule(static) num_threads(workers) if (workers > 1)
  for (int y = 0; y < h; ++y) {
    const double* mid = x.row(y).data();
    const double* up = y > 0 ? x.row(y - 1).data() : nullptr;
    const double* down = y + 1 < h ? x.row(y + 1).data() : nullptr;
    const double* b = rhs.row(y).data();
    ResidualSums acc;
    for (int i = 0; i < w; ++i) {
      int deg;
      double r = (b[i] - shift * mid[i]) + neighbour_pull(up, mid, down, i, w, deg);
      acc.sum_sq += r * r;
      acc.sum += r;
    }
    rows[static_cast<std::size_t>(y)] = acc;
  }
  ResidualSums total;
  for (const auto& r : rows) {
    total.sum_sq += r.sum_sq;
    total.sum += r.sum;
  }
  return total;
}

void sor_sweep(double shift, double omega, const PixelGrid& rhs, PixelGrid& x, int color,
               int workers) {
  const int w = x.width();
  const int h = x.height();
  std::array<double, 5> inv_diag{};
  for (int d = 0; d < 5; ++d) inv_diag[d] = 1.0 / (shift + d);
#pragma omp parallel for schedule(static) num_threads(workers) if (workers > 1)
  for (int y = 0; y < h; ++y) {
    double* mid = x.row(y).data();
    const double* up = y > 0 ? x.row(y - 1).data() : nullptr;
    const double* down = y + 1 < h ? x.row(y + 1).data() : nullptr;
    const double* b = rhs.row(y).data();
    for (int i = (y + color) & 1; i < w; i += 2) {
      int deg;
      double r = (b[i] - shift * mid[i]) + neighbour_pull(up, mid, down, i, w, deg);
      mid[i] += omega * r * inv_diag[deg];
    }
  }
}

// Over-relaxation factor from the Jacobi spectral radius of the smoothest
// non-constant Neumann mode.
double relaxation_factor(double shift, int w, int h) {
  int degree = (w > 1 ? 2 : 0) + (h > 1 ? 2 : 0);
  if (degree == 0) return 1.0;
  int n = std::max(w, h);
  double lambda1 = 2.0 * (1.0 - std::cos(std::numbers::pi / n));
  double rho = std::clamp((degree - lambda1) / (degree + shift), 0.0, 1.0);
  return 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
}

std::string residual_message(int iterations, double residual, double tolerance) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "mesh solver did not converge in %d iterations (relative residual %.3e, tolerance %.3e)",
                iterations, residual, tolerance);
  return buf;
}

double l2_norm(const PixelGrid& g) {
  double s = 0.0;
  for (int y = 0; y < g.height(); ++y) {
    double row = 0.0;
    for (double v : g.row(y)) row += v * v;
    s += row;
  }
  return std::sqrt(s);
}

void require_finite(const PixelGrid& g, const char* what) {
  for (double v : g)
    if (!std::isfinite(v)) throw DataError(std::string("non-finite value in ") + what);
}

}  // namespace

void MeshParams::validate() const {
  if (!(space_constant > 0.0) || !std::isfinite(space_constant))
    throw ConfigError("space constant L must be positive");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("surround tau must be >= 0");
}

PixelGrid apply_mesh_operator(double shift, const PixelGrid& x) {
  const int w = x.width();
  const int h = x.height();
  PixelGrid out(w, h);
  for (int y = 0; y < h; ++y) {
    const double* mid = x.row(y).data();
    const double* up = y > 0 ? x.row(y - 1).data() : nullptr;
    const double* down = y + 1 < h ? x.row(y + 1).data() : nullptr;
    for (int i = 0; i < w; ++i) {
      int deg;
      out(i, y) = shift * mid[i] - neighbour_pull(up, mid, down, i, w, deg);
    }
  }
  return out;
}

SolveReport solve_mesh_system(double shift, const PixelGrid& rhs, PixelGrid& x,
                              const SolverOptions& options) {
  if (!(shift > 0.0) || !std::isfinite(shift)) throw ConfigError("mesh shift must be positive");
  if (!(options.tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (options.max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  require_finite(rhs, "mesh right-hand side");

  const int w = rhs.width();
  const int h = rhs.height();
  const std::size_t n = rhs.size();
  if (!x.same_shape(rhs)) {
    x = PixelGrid(w, h);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / shift;
  }
  if (n == 0) return {};

  const double rhs_norm = l2_norm(rhs);
  if (rhs_norm == 0.0) {
    x.fill(0.0);
    return {};
  }

  const int workers = worker_count();
  const double omega = relaxation_factor(shift, w, h);
  const double target = options.tolerance * rhs_norm;
  std::vector<ResidualSums> rows(static_cast<std::size_t>(h));

  // Rounding sets a residual floor (it grows as shift shrinks); give up once
  // the residual has not improved by 1% for this many sweeps.
  constexpr int kStallSweeps = 2000;
  double best = std::numeric_limits<double>::infinity();
  int best_it = 0;

  ResidualSums res = residual_sums(shift, rhs, x, rows, workers);
  for (int it = 0;; ++it) {
    // Remove the constant error component: 1^T A e = shift * 1^T e = 1^T r.
    double correction = res.sum / (static_cast<double>(n) * shift);
    if (correction != 0.0)
      for (double& v : x) v += correction;
    double norm_sq = std::max(0.0, res.sum_sq - res.sum * res.sum / static_cast<double>(n));

    if (std::sqrt(norm_sq) <= target) {
      // Confirm against a freshly computed residual.
      res = residual_sums(shift, rhs, x, rows, workers);
      if (std::sqrt(res.sum_sq) <= target) return {it, std::sqrt(res.sum_sq) / rhs_norm};
      continue;
    }
    if (std::sqrt(norm_sq) < 0.99 * best) {
      best = std::sqrt(norm_sq);
      best_it = it;
    }
    if (it >= options.max_iterations || it - best_it >= kStallSweeps)
      throw SolverError(residual_message(it, std::sqrt(norm_sq) / rhs_norm, options.tolerance), it,
                        std::sqrt(norm_sq) / rhs_norm);

    sor_sweep(shift, omega, rhs, x, 0, workers);
    sor_sweep(shift, omega, rhs, x, 1, workers);
    res = residual_sums(shift, rhs, x, rows, workers);
  }
}

PixelGrid solve_steady_state(const PixelGrid& v_p, const MeshParams& params,
                             const SolverOptions& options) {
  PixelGrid v_h = v_p;
  solve_steady_state(v_p, params, v_h, options);
  return v_h;
}

SolveReport solve_steady_state(const PixelGrid& v_p, const MeshParams& params, PixelGrid& v_h,
                               const SolverOptions& options) {
  params.validate();
  const double g = params.conductance();
  PixelGrid rhs(v_p.width(), v_p.height());
  for (std::size_t i = 0; i < v_p.size(); ++i) rhs[i] = g * v_p[i];
  if (!v_h.same_shape(v_p)) v_h = v_p;
  return solve_mesh_system(g, rhs, v_h, options);
}

SolveReport step_transient(PixelGrid& v_h, const PixelGrid& v_p, const MeshParams& params,
                           double dt, const SolverOptions& options) {
  params.validate();
  if (!(dt > 0.0)) throw ConfigError("transient step needs dt > 0");
  if (!(params.tau > 0.0)) throw ConfigError("transient step needs tau > 0");
  if (!v_h.same_shape(v_p)) throw DataError("surround state and drive differ in size");
  const double g = params.conductance();
  const double c_over_dt = params.capacitance() / dt;
  PixelGrid rhs(v_p.width(), v_p.height());
  for (std::size_t i = 0; i < v_p.size(); ++i) rhs[i] = c_over_dt * v_h[i] + g * v_p[i];
  return solve_mesh_system(c_over_dt + g, rhs, v_h, options);
}

Surround::Surround(const PixelGrid& v_p, MeshParams params, SolverOptions options)
    : params_(params), options_(options), v_h_(v_p) {
  params_.validate();
  last_ = solve_steady_state(v_p, params_, v_h_, options_);
  total_iterations_ += last_.iterations;
}

const PixelGrid& Surround::update(const PixelGrid& v_p, double dt) {
  if (params_.quasi_static())
    last_ = solve_steady_state(v_p, params_, v_h_, options_);
  else
    last_ = step_transient(v_h_, v_p, params_, dt, options_);
  total_iterations_ += last_.iterations;
  return v_h_;
}

double fit_space_constant(const PixelGrid& response, Pixel source, double nominal_L,
                          Direction direction) {
  if (!(nominal_L > 0.0)) throw ConfigError("nominal space constant must be positive");
  if (source.x < 0 || source.y < 0 || source.x >= response.width() || source.y >= response.height())
    throw ConfigError("fit source lies outside the response");

  int dx = 0, dy = 0;
  switch (direction) {
    case Direction::PlusX: dx = 1; break;
    case Direction::MinusX: dx = -1; break;
    case Direction::PlusY: dy = 1; break;
    case Direction::MinusY: dy = -1; break;
  }
  // The 2-px edge exclusion applies along the fit axis; the perpendicular
  // coordinate is the source's (a 1-px chain is allowed).
  auto usable = [&](int x, int y) {
    if (dx != 0) return x >= 2 && x < response.width() - 2 && y >= 0 && y < response.height();
    return y >= 2 && y < response.height() - 2 && x >= 0 && x < response.width();
  };

  int x1 = source.x + dx, y1 = source.y + dy;
  if (x1 < 0 || y1 < 0 || x1 >= response.width() || y1 >= response.height())
    throw FitError("no pixel next to the fit source");
  double adjacent = std::abs(response(x1, y1));
  if (!(adjacent >= 1e-12)) throw FitError("response next to the source is too small to fit");

  const int max_d = static_cast<int>(std::floor(3.0 * nominal_L));
  double s_d = 0, s_l = 0, s_dd = 0, s_dl = 0;
  int count = 0;
  for (int d = 1; d <= max_d; ++d) {
    int x = source.x + d * dx, y = source.y + d * dy;
    if (!usable(x, y)) break;
    double v = std::abs(response(x, y));
    if (!(v > 1e-300) || !std::isfinite(v)) break;
    double l = std::log(v);
    s_d += d;
    s_l += l;
    s_dd += static_cast<double>(d) * d;
    s_dl += d * l;
    ++count;
  }
  if (count < 2) throw FitError("fewer than two usable samples in the decay region");
  double denom = count * s_dd - s_d * s_d;
  double slope = (count * s_dl - s_d * s_l) / denom;
  if (!(slope < 0.0)) throw FitError("response does not decay away from the source");
  return -1.0 / slope;
}

}  // namespace csdvs
