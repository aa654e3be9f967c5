#pragma once

#include "csdvs/grid.hpp"

namespace csdvs {

/// Resistive-mesh parameters in normalised units: lateral resistance R = 1,
/// transverse conductance G = 1 / L^2, node capacitance C = tau * G.
struct MeshParams {
  double space_constant = 10.0;  // L, pixels
  double tau = 0.0;              // C / G in seconds; 0 selects the quasi-static surround

  double conductance() const { return 1.0 / (space_constant * space_constant); }
  double capacitance() const { return tau * conductance(); }
  bool quasi_static() const { return tau == 0.0; }
  void validate() const;
};

struct SolverOptions {
  double tolerance = 1e-8;  // relative residual ||b - A x|| / ||b||
  int max_iterations = 100000;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

// Mesh operator with Neumann edges: (A x)_i = (shift + deg_i) x_i - sum_{j in N(i)} x_j,
// N(i) the 4-neighbourhood clipped to the array.
PixelGrid apply_mesh_operator(double shift, const PixelGrid& x);

// Solves (shift I + Laplacian) x = rhs by red-black SOR, starting from `x`
// (replaced by rhs / shift when its shape does not match). The constant
// vector is an exact eigenvector of the operator, so its error component is
// removed directly after every sweep. Results do not depend on the worker
// count. Throws SolverError when max_iterations is reached.
SolveReport solve_mesh_system(double shift, const PixelGrid& rhs, PixelGrid& x,
                              const SolverOptions& options = {});

/// Surround field at equilibrium: (G + deg/R) v_h - (1/R) sum v_h(j) = G v_p.
PixelGrid solve_steady_state(const PixelGrid& v_p, const MeshParams& params,
                             const SolverOptions& options = {});

// Warm-started form: `v_h` holds the initial guess and receives the solution.
SolveReport solve_steady_state(const PixelGrid& v_p, const MeshParams& params, PixelGrid& v_h,
                               const SolverOptions& options);

// One backward-Euler step of C dv_h/dt = G (v_p - v_h) - (1/R) sum (v_h - v_j):
//   (C/dt + G + deg/R) v_h'(i) - (1/R) sum v_h'(j) = (C/dt) v_h(i) + G v_p(i).
SolveReport step_transient(PixelGrid& v_h, const PixelGrid& v_p, const MeshParams& params,
                           double dt, const SolverOptions& options = {});

/// Stateful surround used by the pipeline. Starts at the steady state of the
/// first photoreceptor frame; quasi-static updates warm-start from the previous
/// field.
class Surround {
 public:
  Surround(const PixelGrid& v_p, MeshParams params, SolverOptions options = {});

  const PixelGrid& update(const PixelGrid& v_p, double dt);

  const PixelGrid& field() const { return v_h_; }
  const MeshParams& params() const { return params_; }
  const SolveReport& last_report() const { return last_; }
  long long total_iterations() const { return total_iterations_; }

 private:
  MeshParams params_;
  SolverOptions options_;
  PixelGrid v_h_;
  SolveReport last_;
  long long total_iterations_ = 0;
};

struct Pixel {
  int x = 0;
  int y = 0;
};

enum class Direction { PlusX, MinusX, PlusY, MinusY };

// Space constant of a decaying response, measured along `direction` from
// `source`: least-squares fit of ln|response| against distance over
// d = 1 .. 3 * nominal_L, skipping pixels within 2 px of the array edge.
// Throws FitError if the response next to the source is below 1e-12 or fewer
// than two usable samples remain.
double fit_space_constant(const PixelGrid& response, Pixel source, double nominal_L,
                          Direction direction = Direction::PlusX);

}  // namespace csdvs
