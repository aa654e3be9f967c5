#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "csdvs/error.hpp"
#include "csdvs/parallel.hpp"
#include "csdvs/surround.hpp"
#include "oracles.hpp"

using namespace csdvs;

namespace {

PixelGrid random_grid(int w, int h, std::uint64_t seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  PixelGrid g(w, h);
  for (double& v : g) v = u(rng);
  return g;
}

double rel_l2(const PixelGrid& a, const PixelGrid& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

double max_abs_diff(const PixelGrid& a, const PixelGrid& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

PixelGrid chain_impulse(int n, double L) {
  PixelGrid v_p(n, 1, 0.0);
  v_p(n / 2, 0) = 1.0;
  return solve_steady_state(v_p, MeshParams{L, 0}, SolverOptions{1e-13, 1000000});
}

const SolverOptions kTight{1e-10, 100000};

}  // namespace

TEST_CASE("uniform drive gives a uniform surround") {
  for (double L : {0.5, 3.0, 10.0, 1000.0}) {
    PixelGrid v_h = solve_steady_state(PixelGrid(17, 9, -0.8), MeshParams{L, 0});
    for (double v : v_h) CHECK(v == doctest::Approx(-0.8).epsilon(1e-12));
  }
}

TEST_CASE("zero drive") {
  PixelGrid v_h = solve_steady_state(PixelGrid(8, 8, 0.0), MeshParams{10, 0});
  for (double v : v_h) CHECK(v == 0.0);
}

TEST_CASE("1D chain decays by the characteristic root") {
  const double L = 10.0;
  const double gamma = oracle::chain_gamma(1.0 / (L * L));
  CHECK(gamma == doctest::Approx(0.904875).epsilon(1e-6));
  CHECK(-1.0 / std::log(gamma) == doctest::Approx(10.0042).epsilon(1e-5));
  PixelGrid v_h = chain_impulse(201, L);
  for (int d = 1; d <= 30; ++d) {
    double ratio = v_h(100 + d, 0) / v_h(100 + d - 1, 0);
    CHECK(ratio == doctest::Approx(gamma).epsilon(1e-4));
  }
}

TEST_CASE("1D chain fit matches the oracle within 2%") {
  for (double L : {5.0, 10.0, 20.0}) {
    const int n = std::max(201, static_cast<int>(20 * L) + 1);
    PixelGrid v_h = chain_impulse(n, L);
    double oracle_L = -1.0 / std::log(oracle::chain_gamma(1.0 / (L * L)));
    double fitted = fit_space_constant(v_h, {n / 2, 0}, L);
    CHECK(fitted == doctest::Approx(oracle_L).epsilon(0.02));
    CHECK(fit_space_constant(v_h, {n / 2, 0}, L, Direction::MinusX) == doctest::Approx(fitted).epsilon(1e-6));
  }
}

TEST_CASE("2D edge response space constant") {
  PixelGrid v_p(256, 256, 0.0);
  for (int y = 0; y < 256; ++y)
    for (int x = 128; x < 256; ++x) v_p(x, y) = 1.0;
  PixelGrid v_h = solve_steady_state(v_p, MeshParams{10, 0});
  PixelGrid r(256, 256);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = v_p[i] - v_h[i];
  double right = fit_space_constant(r, {127, 128}, 10.0, Direction::PlusX);
  double left = fit_space_constant(r, {128, 128}, 10.0, Direction::MinusX);
  CHECK(right == doctest::Approx(10.0).epsilon(0.15));
  CHECK(left == doctest::Approx(10.0).epsilon(0.15));
}

TEST_CASE("2D impulse fit is monotone in L") {
  double prev = 0.0;
  for (double L : {2.0, 5.0, 10.0, 20.0}) {
    PixelGrid v_p(129, 129, 0.0);
    v_p(64, 64) = 1.0;
    PixelGrid v_h = solve_steady_state(v_p, MeshParams{L, 0}, SolverOptions{1e-12, 1000000});
    double fitted = fit_space_constant(v_h, {64, 64}, L);
    CHECK(fitted > prev);
    prev = fitted;
  }
}

TEST_CASE("fit errors") {
  PixelGrid zero(50, 1, 0.0);
  CHECK_THROWS_AS(fit_space_constant(zero, {25, 0}, 10.0), FitError);
  PixelGrid v(50, 1, 1.0);
  CHECK_THROWS_AS(fit_space_constant(v, {47, 0}, 10.0), FitError);  // runs into the edge margin
}

TEST_CASE("matches a dense direct solve on 32x32") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PixelGrid v_p = random_grid(32, 32, seed);
    PixelGrid ref = oracle::dense_steady_state(v_p, 10.0);
    PixelGrid got = solve_steady_state(v_p, MeshParams{10, 0}, kTight);
    CHECK(rel_l2(got, ref) <= 1e-8);
  }
  // Non-square grid and small L.
  PixelGrid v_p = random_grid(24, 11, 99);
  CHECK(rel_l2(solve_steady_state(v_p, MeshParams{1.5, 0}, kTight), oracle::dense_steady_state(v_p, 1.5)) <= 1e-8);
}

TEST_CASE("residual meets the requested tolerance") {
  PixelGrid v_p = random_grid(40, 30, 5);
  const MeshParams mp{10, 0};
  PixelGrid v_h;
  SolveReport rep = solve_steady_state(v_p, mp, v_h, SolverOptions{});
  CHECK(rep.relative_residual <= 1e-8);
  const double g = mp.conductance();
  PixelGrid ax = apply_mesh_operator(g, v_h);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    num += (ax[i] - g * v_p[i]) * (ax[i] - g * v_p[i]);
    den += (g * v_p[i]) * (g * v_p[i]);
  }
  CHECK(std::sqrt(num / den) <= 1e-8);
}

TEST_CASE("maximum principle, linearity, symmetry, flux balance") {
  const MeshParams mp{10, 0};
  PixelGrid a = random_grid(32, 32, 11), b = random_grid(32, 32, 12);
  PixelGrid ha = solve_steady_state(a, mp, kTight), hb = solve_steady_state(b, mp, kTight);

  auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  for (double v : ha) {
    CHECK(v >= *lo);
    CHECK(v <= *hi);
  }

  PixelGrid mix(32, 32);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.0 * a[i] - 0.5 * b[i];
  PixelGrid hm = solve_steady_state(mix, mp, kTight);
  for (std::size_t i = 0; i < mix.size(); ++i) CHECK(hm[i] == doctest::Approx(2.0 * ha[i] - 0.5 * hb[i]).epsilon(1e-7));

  PixelGrid imp(33, 33, 0.0);
  imp(16, 16) = 1.0;
  PixelGrid hi_ = solve_steady_state(imp, mp, SolverOptions{1e-12, 100000});
  for (int y = 0; y < 33; ++y)
    for (int x = 0; x < 33; ++x) {
      double v = hi_(x, y);
      CHECK(hi_(32 - x, y) == doctest::Approx(v).epsilon(1e-9));
      CHECK(hi_(x, 32 - y) == doctest::Approx(v).epsilon(1e-9));
      CHECK(hi_(y, x) == doctest::Approx(v).epsilon(1e-9));
    }

  // Zero-mean drive: no net current through the transverse conductances.
  double m = 0;
  for (double v : a) m += v;
  m /= static_cast<double>(a.size());
  PixelGrid z = a;
  for (double& v : z) v -= m;
  PixelGrid hz = solve_steady_state(z, mp);
  const double g = mp.conductance();
  double flux = 0, l1 = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    flux += g * (z[i] - hz[i]);
    l1 += std::abs(g * z[i]);
  }
  CHECK(std::abs(flux) <= 1e-8 * l1);
}

TEST_CASE("spatial high-pass behaviour") {
  const int w = 1024;
  const double L = 10.0;
  std::vector<double> gain;
  for (double period : {4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0}) {
    PixelGrid v_p(w, 1);
    for (int x = 0; x < w; ++x) v_p(x, 0) = std::cos(2 * std::numbers::pi * x / period);
    PixelGrid v_h = solve_steady_state(v_p, MeshParams{L, 0}, SolverOptions{1e-12, 1000000});
    double num = 0, den = 0;
    for (int x = 0; x < w; ++x) {
      num += std::pow(v_p(x, 0) - v_h(x, 0), 2);
      den += std::pow(v_p(x, 0), 2);
    }
    gain.push_back(std::sqrt(num / den));
  }
  for (std::size_t i = 1; i < gain.size(); ++i) CHECK(gain[i] < gain[i - 1]);
  // P = 4 << 2 pi L vs P = 1024 >> 2 pi L.
  CHECK(gain.front() / gain.back() >= 10.0);
}

TEST_CASE("transient step") {
  const MeshParams mp{10, 2e-3};
  PixelGrid v_p = random_grid(16, 16, 3);
  PixelGrid start = random_grid(16, 16, 4);

  SUBCASE("tiny dt is nearly the identity") {
    PixelGrid v = start;
    // Lateral modes relax in ~C/(G + 8), a few microseconds here.
    step_transient(v, v_p, mp, 1e-16, kTight);
    CHECK(max_abs_diff(v, start) < 1e-9);
  }
  SUBCASE("converges to the steady state after 10 tau") {
    // The slowest mode is the array mean, decaying by 1/(1 + dt/tau) per step.
    PixelGrid ss = solve_steady_state(v_p, mp, kTight);
    PixelGrid v = ss;
    for (double& x : v) x += 0.01;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.05 * start[i];
    for (int i = 0; i < 200; ++i) step_transient(v, v_p, mp, 1e-4, kTight);
    CHECK(max_abs_diff(v, ss) < 1e-6);
    CHECK(max_abs_diff(v, ss) <= 0.015 * std::pow(1.0 / 1.05, 200));
  }
  SUBCASE("fixed point is the steady state") {
    PixelGrid v = solve_steady_state(v_p, mp, SolverOptions{1e-13, 100000});
    PixelGrid before = v;
    step_transient(v, v_p, mp, 1e-3, SolverOptions{1e-13, 100000});
    CHECK(max_abs_diff(v, before) < 1e-10);
  }
  SUBCASE("first-order convergence to the exact trajectory") {
    // Reference: forward Euler with a micro step far below the stability limit.
    PixelGrid exact = oracle::explicit_euler(start, v_p, 10.0, 2e-3, 2e-3, 1e-7);
    double prev_err = 0;
    for (int n : {10, 20, 40}) {
      PixelGrid v = start;
      for (int i = 0; i < n; ++i) step_transient(v, v_p, mp, 2e-3 / n, SolverOptions{1e-13, 100000});
      double err = max_abs_diff(v, exact);
      if (prev_err > 0) CHECK(prev_err / err == doctest::Approx(2.0).epsilon(0.1));
      prev_err = err;
    }
  }
  SUBCASE("requires tau > 0 and dt > 0") {
    PixelGrid v = start;
    CHECK_THROWS_AS(step_transient(v, v_p, MeshParams{10, 0}, 1e-3), ConfigError);
    CHECK_THROWS_AS(step_transient(v, v_p, mp, 0.0), ConfigError);
  }
}

TEST_CASE("Surround object modes") {
  PixelGrid a = random_grid(20, 20, 8), b = random_grid(20, 20, 9);
  Surround qs(a, MeshParams{5, 0});
  qs.update(b, 2e-3);
  CHECK(rel_l2(qs.field(), solve_steady_state(b, MeshParams{5, 0})) < 1e-6);
  CHECK(qs.total_iterations() > 0);

  Surround tr(a, MeshParams{5, 2e-3});
  PixelGrid before = tr.field();
  tr.update(b, 1e-4);
  CHECK(max_abs_diff(tr.field(), before) > 0.0);
  CHECK(rel_l2(tr.field(), solve_steady_state(b, MeshParams{5, 0})) > 1e-3);
}

TEST_CASE("parameter validation and solver cap") {
  CHECK_THROWS_AS(MeshParams({0.0, 0}).validate(), ConfigError);
  CHECK_THROWS_AS(MeshParams({10, -1}).validate(), ConfigError);
  CHECK(MeshParams{10, 2e-3}.capacitance() == doctest::Approx(2e-5));
  PixelGrid v_p = random_grid(64, 64, 2);
  try {
    solve_steady_state(v_p, MeshParams{10, 0}, SolverOptions{1e-14, 3});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.iterations() == 3);
    CHECK(e.residual() > 1e-14);
  }
}

TEST_CASE("results do not depend on the worker count") {
  PixelGrid v_p = random_grid(61, 47, 21);
  PixelGrid ref;
  for (int w : {1, 2, 3, 5, 8}) {
    set_worker_count(w);
    PixelGrid v_h = solve_steady_state(v_p, MeshParams{10, 0});
    PixelGrid tr = v_h;
    step_transient(tr, random_grid(61, 47, 22), MeshParams{10, 2e-3}, 1e-4);
    if (ref.empty())
      ref = tr;
    else
      CHECK(tr == ref);
  }
  set_worker_count(0);
}
