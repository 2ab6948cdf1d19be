#include <doctest.h>

#include "mlo/mpb.hpp"
#include "oracles.hpp"

using namespace mlo;

namespace {

MpbConfig small_config(int dims, std::uint64_t seed) {
  MpbConfig cfg = MpbConfig::defaults(dims);
  cfg.seed = seed;
  return cfg;
}

bool states_identical(const MpbState& a, const MpbState& b) {
  if (a.time_step != b.time_step || a.peaks.size() != b.peaks.size()) return false;
  for (std::size_t i = 0; i < a.peaks.size(); ++i) {
    if (a.peaks[i].height != b.peaks[i].height) return false;
    if (a.peaks[i].width != b.peaks[i].width) return false;
    if (a.peaks[i].center != b.peaks[i].center) return false;
    if (a.peaks[i].prev_shift != b.peaks[i].prev_shift) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("mpb_init: degenerate ranges pin height and width exactly") {
  MpbConfig cfg = small_config(2, 3);
  cfg.num_peaks = 1;
  cfg.height_min = cfg.height_max = 50.0;
  cfg.width_min = cfg.width_max = 1.0;
  const MpbState state = mpb_init(cfg);
  REQUIRE(state.peaks.size() == 1);
  CHECK(state.peaks[0].height == 50.0);
  CHECK(state.peaks[0].width == 1.0);
}

TEST_CASE("mpb_init: bitwise deterministic for a fixed seed") {
  const MpbConfig cfg = small_config(3, 123);
  CHECK(states_identical(mpb_init(cfg), mpb_init(cfg)));
}

TEST_CASE("mpb_init: centers inside bounds over 1000 seeds") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    MpbConfig cfg = small_config(4, seed);
    const MpbState state = mpb_init(cfg);
    REQUIRE(state.peaks.size() == 5);
    for (const auto& p : state.peaks)
      for (int d = 0; d < 4; ++d) {
        REQUIRE(p.center[d] >= cfg.lower[d]);
        REQUIRE(p.center[d] <= cfg.upper[d]);
      }
  }
}

TEST_CASE("mpb_init: invalid configs rejected") {
  MpbConfig cfg = small_config(2, 1);
  cfg.num_peaks = 0;
  CHECK_THROWS_AS(mpb_init(cfg), ConfigError);
  cfg = small_config(2, 1);
  cfg.height_min = 0.0;
  CHECK_THROWS_AS(mpb_init(cfg), ConfigError);
  cfg = small_config(2, 1);
  cfg.num_environments = 1;
  CHECK_THROWS_AS(mpb_init(cfg), ConfigError);
}

TEST_CASE("mpb_eval: cone apex and closed form") {
  MpbConfig cfg = small_config(2, 9);
  cfg.num_peaks = 1;
  MpbState state = mpb_init(cfg);
  const auto& peak = state.peaks[0];
  CHECK(mpb_eval(state, peak.center) == doctest::Approx(peak.height));

  Eigen::VectorXd x = peak.center;
  x[0] = std::min(cfg.upper[0], x[0] + 3.0);
  const double d = (x - peak.center).norm();
  CHECK(mpb_eval(state, x) == doctest::Approx(peak.height - peak.width * d));
}

TEST_CASE("mpb_eval: matches brute-force max over peaks") {
  const MpbConfig cfg = small_config(3, 77);
  const MpbState state = mpb_init(cfg);
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x(3);
    for (int d = 0; d < 3; ++d) x[d] = rng.uniform(cfg.lower[d], cfg.upper[d]);
    double expected = -1e300;
    for (const auto& p : state.peaks)
      expected = std::max(expected, p.height - p.width * (x - p.center).norm());
    CHECK(mpb_eval(state, x) == doctest::Approx(expected));
  }
}

TEST_CASE("mpb_eval: out-of-bounds rejected") {
  const MpbConfig cfg = small_config(2, 9);
  const MpbState state = mpb_init(cfg);
  Eigen::VectorXd x(2);
  x << -1.0, 5.0;
  CHECK_THROWS_AS(mpb_eval(state, x), std::invalid_argument);
}

TEST_CASE("mpb_advance: zero severities leave peaks unchanged") {
  MpbConfig cfg = small_config(2, 11);
  cfg.height_severity = 0.0;
  cfg.shift_severity = 0.0;
  cfg.width_severity = 0.0;
  const MpbState s0 = mpb_init(cfg);
  const MpbState s1 = mpb_advance(s0, cfg);
  CHECK(s1.time_step == 1);
  for (std::size_t i = 0; i < s0.peaks.size(); ++i) {
    CHECK(s1.peaks[i].height == s0.peaks[i].height);
    CHECK(s1.peaks[i].width == s0.peaks[i].width);
    CHECK(s1.peaks[i].center == s0.peaks[i].center);
  }
}

TEST_CASE("mpb_advance: centers move exactly shift_severity before reflection") {
  MpbConfig cfg = small_config(5, 21);
  cfg.shift_severity = 5.0;
  // Generous bounds keep reflection out of the picture for one step.
  cfg.lower = Eigen::VectorXd::Constant(5, -1000.0);
  cfg.upper = Eigen::VectorXd::Constant(5, 1000.0);
  const MpbState s0 = mpb_init(cfg);
  const MpbState s1 = mpb_advance(s0, cfg);
  for (std::size_t i = 0; i < s0.peaks.size(); ++i) {
    const double moved = (s1.peaks[i].center - s0.peaks[i].center).norm();
    CHECK(moved == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("mpb_advance: heights stay in range over 1000 seeded runs") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    MpbConfig cfg = small_config(2, seed);
    cfg.height_severity = 7.0;
    cfg.num_environments = 11;
    MpbState state = mpb_init(cfg);
    for (int step = 0; step < 10; ++step) {
      state = mpb_advance(state, cfg);
      for (const auto& p : state.peaks) {
        REQUIRE(p.height >= cfg.height_min);
        REQUIRE(p.height <= cfg.height_max);
      }
    }
  }
}

TEST_CASE("mpb_advance: long fuzz keeps every field inside its range") {
  MpbConfig cfg = small_config(3, 1234);
  cfg.num_environments = 10001;
  cfg.correlation = 0.5;
  MpbState state = mpb_init(cfg);
  for (int step = 0; step < 10000; ++step) {
    state = mpb_advance(state, cfg);
    for (const auto& p : state.peaks) {
      REQUIRE(p.height >= cfg.height_min);
      REQUIRE(p.height <= cfg.height_max);
      REQUIRE(p.width >= cfg.width_min);
      REQUIRE(p.width <= cfg.width_max);
      for (int d = 0; d < cfg.dims; ++d) {
        REQUIRE(p.center[d] >= cfg.lower[d]);
        REQUIRE(p.center[d] <= cfg.upper[d]);
      }
    }
  }
}

TEST_CASE("mpb_advance: rejects stepping past the final environment") {
  MpbConfig cfg = small_config(2, 5);
  cfg.num_environments = 2;
  MpbState state = mpb_advance(mpb_init(cfg), cfg);
  CHECK_THROWS_AS(mpb_advance(state, cfg), std::invalid_argument);
}

TEST_CASE("mpb: full landscape sequence reproducible bit for bit") {
  const MpbConfig cfg = small_config(4, 999);
  MpbState a = mpb_init(cfg);
  MpbState b = mpb_init(cfg);
  for (int step = 0; step < 9; ++step) {
    a = mpb_advance(a, cfg);
    b = mpb_advance(b, cfg);
    REQUIRE(states_identical(a, b));
  }
}

TEST_CASE("mpb: eval bounded by max height, equality only at a maximal apex") {
  const MpbConfig cfg = small_config(2, 31);
  const MpbState state = mpb_init(cfg);
  double max_h = 0.0;
  for (const auto& p : state.peaks) max_h = std::max(max_h, p.height);
  Rng rng(7);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd x(2);
    for (int d = 0; d < 2; ++d) x[d] = rng.uniform(cfg.lower[d], cfg.upper[d]);
    REQUIRE(mpb_eval(state, x) <= max_h + 1e-12);
  }
  const auto [xstar, fstar] = mpb_global_optimum(state);
  CHECK(mpb_eval(state, xstar) == doctest::Approx(max_h));
}

TEST_CASE("mpb: Lipschitz bound with the largest width as the constant") {
  const MpbConfig cfg = small_config(3, 41);
  const MpbState state = mpb_init(cfg);
  double wmax = 0.0;
  for (const auto& p : state.peaks) wmax = std::max(wmax, p.width);
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd x(3), y(3);
    for (int d = 0; d < 3; ++d) {
      x[d] = rng.uniform(cfg.lower[d], cfg.upper[d]);
      y[d] = rng.uniform(cfg.lower[d], cfg.upper[d]);
    }
    REQUIRE(std::abs(mpb_eval(state, x) - mpb_eval(state, y)) <=
            wmax * (x - y).norm() + 1e-9);
  }
}

TEST_CASE("mpb_global_optimum: argmax and tie-break by lowest index") {
  MpbConfig cfg = small_config(2, 1);
  cfg.num_peaks = 3;
  MpbState state = mpb_init(cfg);
  state.peaks[0].height = 30.0;
  state.peaks[1].height = 70.0;
  state.peaks[2].height = 41.0;
  auto [x, f] = mpb_global_optimum(state);
  CHECK(f == 70.0);
  CHECK(x == state.peaks[1].center);

  state.peaks[2].height = 70.0;  // tie with peak 1
  auto [x2, f2] = mpb_global_optimum(state);
  CHECK(f2 == 70.0);
  CHECK(x2 == state.peaks[1].center);
}

TEST_CASE("mpb_global_optimum: matches a dense 401x401 grid search in 2-d") {
  const MpbConfig cfg = small_config(2, 404);
  const MpbState state = mpb_init(cfg);
  const auto [xstar, fstar] = mpb_global_optimum(state);

  double grid_best = -1e300;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) {
      Eigen::VectorXd x(2);
      x[0] = cfg.lower[0] + (cfg.upper[0] - cfg.lower[0]) * i / 400.0;
      x[1] = cfg.lower[1] + (cfg.upper[1] - cfg.lower[1]) * j / 400.0;
      grid_best = std::max(grid_best, mpb_eval(state, x));
    }
  // Grid resolution: one cell diagonal times the steepest slope.
  const double cell = (cfg.upper[0] - cfg.lower[0]) / 400.0;
  double wmax = 0.0;
  for (const auto& p : state.peaks) wmax = std::max(wmax, p.width);
  CHECK(fstar >= grid_best - 1e-12);
  CHECK(fstar <= grid_best + wmax * cell * std::sqrt(2.0));
}
