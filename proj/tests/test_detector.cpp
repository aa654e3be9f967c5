#include <doctest.h>

#include <cmath>
#include <random>

#include "csdvs/detector.hpp"
#include "csdvs/error.hpp"
#include "csdvs/parallel.hpp"
#include "oracles.hpp"

using namespace csdvs;

namespace {

std::vector<Event> run_detector(const oracle::Trajectory& t, const ThresholdMap& th,
                                ResetMode mode = ResetMode::Ladder) {
  DetectorState s = DetectorState::init(t.diffs[0], t.t_us[0]);
  std::vector<Event> all;
  for (std::size_t f = 1; f < t.diffs.size(); ++f) {
    auto ev = detect_frame(s, t.diffs[f], t.t_us[f], th, mode);
    all.insert(all.end(), ev.begin(), ev.end());
  }
  std::stable_sort(all.begin(), all.end());
  return all;
}

Grid<int> per_pixel(const std::vector<Event>& ev, int w, int h, Polarity p) {
  Grid<int> g(w, h, 0);
  for (const Event& e : ev)
    if (e.polarity == p) ++g(e.x, e.y);
  return g;
}

}  // namespace

TEST_CASE("two ON events on a 0 -> 0.45 ramp") {
  auto th = ThresholdMap::uniform(1, 1, 0.2, 0.2);
  DetectorState s = DetectorState::init(PixelGrid(1, 1, 0.0), 0);
  auto ev = detect_frame(s, PixelGrid(1, 1, 0.45), 1000, th);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].polarity == Polarity::On);
  CHECK(ev[1].polarity == Polarity::On);
  // Crossings of 0.2 and 0.4 on a 1 ms ramp to 0.45: 444.4 us and 888.9 us.
  CHECK(ev[0].t_us == 444);
  CHECK(ev[1].t_us == 888);
  CHECK(s.ref(0, 0) == doctest::Approx(0.4));

  oracle::Trajectory t{{PixelGrid(1, 1, 0.0), PixelGrid(1, 1, 0.45)}, {0, 1000}};
  CHECK(oracle::brute_force_ladder(t.diffs, t.t_us, th.on, th.off) == ev);
}

TEST_CASE("constant difference gives no events") {
  auto th = ThresholdMap::uniform(3, 3, 0.2, 0.2);
  PixelGrid d(3, 3, 0.3);
  DetectorState s = DetectorState::init(d, 0);
  for (int k = 1; k <= 5; ++k) CHECK(detect_frame(s, d, k * 100, th).empty());
  CHECK(s.ref == d);
}

TEST_CASE("threshold equality does not fire") {
  auto th = ThresholdMap::uniform(1, 1, 0.25, 0.25);
  DetectorState s = DetectorState::init(PixelGrid(1, 1, 0.0), 0);
  CHECK(detect_frame(s, PixelGrid(1, 1, -0.25), 10, th).empty());
  CHECK(s.ref(0, 0) == 0.0);
  // Any further drop fires.
  auto ev = detect_frame(s, PixelGrid(1, 1, -0.26), 20, th);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].polarity == Polarity::Off);
}

TEST_CASE("matches the 1 ns brute-force oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    auto t = oracle::random_trajectory(rng, 4, 4, 8, 0.6);
    auto th = ThresholdMap::generate(4, 4, 0.2, 0.02, 100 + trial);
    CHECK(run_detector(t, th) == oracle::brute_force_ladder(t.diffs, t.t_us, th.on, th.off));
  }
}

TEST_CASE("ladder consistency") {
  std::mt19937_64 rng(5);
  auto t = oracle::random_trajectory(rng, 8, 8, 30, 1.0);
  auto th = ThresholdMap::generate(8, 8, 0.2, 0.02, 1);
  DetectorState s = DetectorState::init(t.diffs[0], t.t_us[0]);
  for (std::size_t f = 1; f < t.diffs.size(); ++f) {
    detect_frame(s, t.diffs[f], t.t_us[f], th);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        CHECK(std::abs(t.diffs[f](x, y) - s.ref(x, y)) <= std::max(th.on(x, y), th.off(x, y)));
  }
}

TEST_CASE("raising theta never adds events") {
  std::mt19937_64 rng(9);
  auto t = oracle::random_trajectory(rng, 6, 6, 20, 0.8);
  Grid<int> prev;
  for (double theta : {0.05, 0.1, 0.15, 0.2, 0.3, 0.5}) {
    auto ev = run_detector(t, ThresholdMap::generate(6, 6, theta, 0.0, 0));
    Grid<int> counts(6, 6, 0);
    for (const Event& e : ev) ++counts(e.x, e.y);
    if (!prev.empty())
      for (std::size_t i = 0; i < counts.size(); ++i) CHECK(counts[i] <= prev[i]);
    prev = counts;
  }
}

TEST_CASE("negating the trajectory swaps polarities") {
  std::mt19937_64 rng(13);
  auto t = oracle::random_trajectory(rng, 5, 5, 20, 0.7);
  auto neg = t;
  for (auto& d : neg.diffs)
    for (double& v : d) v = -v;
  auto th = ThresholdMap::generate(5, 5, 0.2, 0.0, 0);
  auto a = run_detector(t, th), b = run_detector(neg, th);
  CHECK(per_pixel(a, 5, 5, Polarity::On) == per_pixel(b, 5, 5, Polarity::Off));
  CHECK(per_pixel(a, 5, 5, Polarity::Off) == per_pixel(b, 5, 5, Polarity::On));
}

TEST_CASE("events are globally ordered and stamped inside the interval") {
  std::mt19937_64 rng(17);
  auto t = oracle::random_trajectory(rng, 10, 7, 2, 2.0);
  auto th = ThresholdMap::generate(10, 7, 0.2, 0.02, 3);
  DetectorState s = DetectorState::init(t.diffs[0], t.t_us[0]);
  auto ev = detect_frame(s, t.diffs[1], t.t_us[1], th);
  CHECK(std::is_sorted(ev.begin(), ev.end()));
  for (const Event& e : ev) {
    CHECK(e.t_us >= t.t_us[0]);
    CHECK(e.t_us <= t.t_us[1]);
  }
}

TEST_CASE("errors") {
  auto th = ThresholdMap::uniform(2, 2, 0.2, 0.2);
  DetectorState s = DetectorState::init(PixelGrid(2, 2, 0.0), 100);
  CHECK_THROWS_AS(detect_frame(s, PixelGrid(2, 2, 0.0), 100, th), DataError);
  PixelGrid bad(2, 2, 0.0);
  bad(1, 1) = std::nan("");
  try {
    detect_frame(s, bad, 200, th);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(1, 1)") != std::string::npos);
  }
  CHECK_THROWS_AS(detect_frame(s, PixelGrid(3, 2, 0.0), 300, th), DataError);
}

TEST_CASE("threshold map sampling") {
  auto a = ThresholdMap::generate(64, 64, 0.2, 0.02, 7);
  auto b = ThresholdMap::generate(64, 64, 0.2, 0.02, 7);
  auto c = ThresholdMap::generate(64, 64, 0.2, 0.02, 8);
  CHECK(a.on == b.on);
  CHECK(a.off == b.off);
  CHECK(a.on != c.on);
  CHECK(a.on != a.off);
  double sum = 0, sq = 0;
  for (double v : a.on) {
    sum += v;
    sq += v * v;
  }
  double n = static_cast<double>(a.on.size());
  double mean = sum / n;
  CHECK(mean == doctest::Approx(0.2).epsilon(0.01));
  CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(0.02).epsilon(0.1));

  auto wide = ThresholdMap::generate(64, 64, 0.2, 0.5, 1);
  for (double v : wide.on) CHECK(v >= 0.05);
  for (double v : wide.off) CHECK(v >= 0.05);
  auto exact = ThresholdMap::generate(4, 4, 0.3, 0.0, 1);
  for (double v : exact.on) CHECK(v == 0.3);
  CHECK_THROWS_AS(ThresholdMap::generate(4, 4, 0.0, 0.0, 1), ConfigError);
}

TEST_CASE("snapshot mode emits at most one event per interval") {
  auto th = ThresholdMap::uniform(1, 1, 0.2, 0.2);
  DetectorState s = DetectorState::init(PixelGrid(1, 1, 0.0), 0);
  auto ev = detect_frame(s, PixelGrid(1, 1, 0.9), 1000, th, ResetMode::Snapshot);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].t_us == 222);
  CHECK(s.ref(0, 0) == 0.9);
  CHECK(detect_frame(s, PixelGrid(1, 1, 0.75), 2000, th, ResetMode::Snapshot).empty());
  ev = detect_frame(s, PixelGrid(1, 1, 0.3), 3000, th, ResetMode::Snapshot);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].polarity == Polarity::Off);
}

TEST_CASE("worker count does not change the event list") {
  std::mt19937_64 rng(31);
  auto t = oracle::random_trajectory(rng, 40, 30, 6, 1.0);
  auto th = ThresholdMap::generate(40, 30, 0.2, 0.02, 4);
  std::vector<Event> ref;
  for (int w : {1, 2, 4, 8}) {
    set_worker_count(w);
    auto ev = run_detector(t, th);
    if (w == 1)
      ref = ev;
    else
      CHECK(ev == ref);
  }
  set_worker_count(0);
}
