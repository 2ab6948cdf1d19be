#include <doctest.h>

#include "mlo/optim.hpp"
#include "oracles.hpp"

using namespace mlo;

namespace {

Eigen::VectorXd constant_vec(int n, double v) { return Eigen::VectorXd::Constant(n, v); }

Population fresh_pop(EaKind kind, const EaParams& params, int n, Rng& rng,
                     const FitnessFn& f) {
  Population pop = init_population(kind, params, constant_vec(n, -5.0),
                                   constant_vec(n, 5.0), rng);
  for (int i = 0; i < pop.size(); ++i)
    pop.fitness[i] = f(pop.individuals.row(i).transpose());
  return pop;
}

}  // namespace

TEST_CASE("ucb: arithmetic, pure exploitation, and zero-variance cases") {
  CHECK(ucb({1.0, 0.25}, 2.0) == doctest::Approx(2.0));
  CHECK(ucb({3.7, 0.9}, 0.0) == doctest::Approx(3.7));
  CHECK(ucb({-1.2, 0.0}, 5.0) == doctest::Approx(-1.2));
}

TEST_CASE("de: null variation (F=0, CR=0) reproduces the parents") {
  Rng rng(3);
  EaParams params;
  params.de_weight = 0.0;
  params.de_crossover = 0.0;
  auto f = [](const Eigen::VectorXd& x) { return -x.squaredNorm(); };
  Population pop = fresh_pop(EaKind::kDe, params, 3, rng, f);
  const Population off = ea_step(pop, EaKind::kDe, params, f, constant_vec(3, -5.0),
                                 constant_vec(3, 5.0), rng);
  CHECK(off.individuals == pop.individuals);
}

TEST_CASE("pso: all-zero coefficients leave positions unchanged") {
  Rng rng(5);
  EaParams params;
  params.pso_inertia = 0.0;
  params.pso_c1 = 0.0;
  params.pso_c2 = 0.0;
  auto f = [](const Eigen::VectorXd& x) { return -x.squaredNorm(); };
  Population pop = fresh_pop(EaKind::kPso, params, 2, rng, f);
  const Population off = ea_step(pop, EaKind::kPso, params, f, constant_vec(2, -5.0),
                                 constant_vec(2, 5.0), rng);
  CHECK(off.individuals == pop.individuals);
}

TEST_CASE("cmaes: converges on the sphere within 200 generations") {
  Rng rng(7);
  EaParams params;
  auto f = [](const Eigen::VectorXd& x) { return -x.squaredNorm(); };  // maximize
  Population pop = fresh_pop(EaKind::kCmaEs, params, 2, rng, f);
  double best = -1e300;
  for (int gen = 0; gen < 200; ++gen) {
    const Population off = ea_step(pop, EaKind::kCmaEs, params, f,
                                   constant_vec(2, -5.0), constant_vec(2, 5.0), rng);
    best = std::max(best, off.fitness.maxCoeff());
    pop = environmental_selection(pop, off, EaKind::kCmaEs, params);
  }
  CHECK(-best < 1e-6);  // best squared norm below 1e-6
}

TEST_CASE("ea_step: population size and bounds preserved across algorithms") {
  Rng rng(11);
  EaParams params;
  auto f = [](const Eigen::VectorXd& x) { return x.sum(); };
  for (EaKind kind : {EaKind::kCmaEs, EaKind::kPso, EaKind::kDe}) {
    Population pop = fresh_pop(kind, params, 3, rng, f);
    Population cur = pop;
    for (int gen = 0; gen < 10; ++gen) {
      const Population off = ea_step(cur, kind, params, f, constant_vec(3, -5.0),
                                     constant_vec(3, 5.0), rng);
      REQUIRE(off.size() == params.pop_size);
      REQUIRE(off.individuals.minCoeff() >= -5.0);
      REQUIRE(off.individuals.maxCoeff() <= 5.0);
      cur = environmental_selection(cur, off, kind, params);
      REQUIRE(cur.size() == params.pop_size);
    }
  }
}

TEST_CASE("de selection: one-to-one replacement rules") {
  Rng rng(13);
  EaParams params;
  auto f = [](const Eigen::VectorXd& x) { return x.sum(); };
  Population pop = fresh_pop(EaKind::kDe, params, 2, rng, f);

  Population worse = pop;
  worse.fitness.array() -= 1.0;
  const Population after_worse = environmental_selection(pop, worse, EaKind::kDe, params);
  CHECK(after_worse.individuals == pop.individuals);

  Population better = pop;
  better.individuals.array() += 0.1;
  better.fitness.array() += 1.0;
  const Population after_better =
      environmental_selection(pop, better, EaKind::kDe, params);
  CHECK(after_better.individuals == better.individuals);
}

TEST_CASE("de selection: mixed case matches a pairwise comparison oracle") {
  Rng rng(17);
  EaParams params;
  auto f = [](const Eigen::VectorXd& x) { return x.prod(); };
  Population pop = fresh_pop(EaKind::kDe, params, 2, rng, f);
  Population off = fresh_pop(EaKind::kDe, params, 2, rng, f);
  const Population sel = environmental_selection(pop, off, EaKind::kDe, params);
  for (int i = 0; i < pop.size(); ++i) {
    if (off.fitness[i] >= pop.fitness[i]) {
      CHECK(sel.individuals.row(i) == off.individuals.row(i));
    } else {
      CHECK(sel.individuals.row(i) == pop.individuals.row(i));
    }
  }
}

namespace {

/// Deterministic GPR surrogate fixture over a handful of points.
struct SurrogateFixture {
  Dataset data;
  SurrogateParams params = SurrogateParams::gpr_defaults();

  explicit SurrogateFixture(double noise_log = std::log(0.01)) {
    Rng rng(23);
    for (int i = 0; i < 6; ++i) {
      Eigen::VectorXd x(2);
      x << rng.uniform(-5, 5), rng.uniform(-5, 5);
      data.add(x, 0, -x.squaredNorm());
    }
    params.values[0] = std::log(3.0);
    params.values[2] = noise_log;
  }
};

}  // namespace

TEST_CASE("identify_promising: GPR w=0 returns the best predicted candidate") {
  SurrogateFixture fx;
  const FittedSurrogate fit(fx.params, fx.data);
  Rng rng(29);
  EaParams params;
  auto f = [&](const Eigen::VectorXd& x) { return fit.predict(x).mean; };
  const Population a = fresh_pop(EaKind::kDe, params, 2, rng, f);
  const Population b = fresh_pop(EaKind::kDe, params, 2, rng, f);

  AcquisitionConfig acq;
  acq.ucb_w = 0.0;
  const auto picked = identify_promising(a, b, fit, acq, 1);
  REQUIRE(picked.size() == 1);
  double best = -1e300;
  for (const auto* pop : {&a, &b})
    for (int i = 0; i < pop->size(); ++i)
      best = std::max(best, fit.predict(pop->individuals.row(i).transpose()).mean);
  CHECK(fit.predict(picked[0]).mean == doctest::Approx(best));
}

TEST_CASE("identify_promising: NN top-xi by predicted mean") {
  Rng rng(31);
  SurrogateParams nn = SurrogateParams::nn_init(2, rng);
  Dataset carrier;
  carrier.add(Eigen::VectorXd::Zero(2), 0, 0.0);
  const FittedSurrogate fit(nn, carrier);
  EaParams params;
  auto f = [&](const Eigen::VectorXd& x) { return fit.predict(x).mean; };
  const Population a = fresh_pop(EaKind::kDe, params, 2, rng, f);
  const Population b = fresh_pop(EaKind::kDe, params, 2, rng, f);

  AcquisitionConfig acq;
  const auto picked = identify_promising(a, b, fit, acq, 5);
  REQUIRE(picked.size() == 5);
  std::vector<double> all;
  for (const auto* pop : {&a, &b})
    for (int i = 0; i < pop->size(); ++i)
      all.push_back(fit.predict(pop->individuals.row(i).transpose()).mean);
  std::sort(all.rbegin(), all.rend());
  for (int k = 0; k < 5; ++k)
    CHECK(fit.predict(picked[k]).mean == doctest::Approx(all[k]));
}

TEST_CASE("identify_promising: duplicates collapse before the top-xi cut") {
  Rng rng(37);
  SurrogateParams nn = SurrogateParams::nn_init(2, rng);
  Dataset carrier;
  carrier.add(Eigen::VectorXd::Zero(2), 0, 0.0);
  const FittedSurrogate fit(nn, carrier);
  EaParams params;
  auto f = [&](const Eigen::VectorXd& x) { return fit.predict(x).mean; };
  Population a = fresh_pop(EaKind::kDe, params, 2, rng, f);
  // Duplicate one row everywhere in the offspring copy.
  Population b = a;
  for (int i = 0; i < b.size(); ++i) b.individuals.row(i) = a.individuals.row(0);
  for (int i = 0; i < b.size(); ++i)
    b.fitness[i] = f(b.individuals.row(i).transpose());

  AcquisitionConfig acq;
  const auto picked = identify_promising(a, b, fit, acq, 5);
  REQUIRE(picked.size() == 5);
  for (std::size_t i = 0; i < picked.size(); ++i)
    for (std::size_t j = i + 1; j < picked.size(); ++j)
      CHECK((picked[i] - picked[j]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("identify_promising: GPR insists on xi == 1 and pool-size limits") {
  SurrogateFixture fx;
  const FittedSurrogate fit(fx.params, fx.data);
  Rng rng(41);
  EaParams params;
  auto f = [&](const Eigen::VectorXd& x) { return fit.predict(x).mean; };
  const Population a = fresh_pop(EaKind::kDe, params, 2, rng, f);
  AcquisitionConfig acq;
  CHECK_THROWS_AS(identify_promising(a, a, fit, acq, 2), std::invalid_argument);
  CHECK_THROWS_AS(identify_promising(a, a, fit, acq, 41), std::invalid_argument);
}

TEST_CASE("maximize_acquisition: dominates 1000 random probes on a flat posterior") {
  Dataset data;
  data.add(Eigen::VectorXd::Zero(2), 0, 0.5);
  SurrogateParams params = SurrogateParams::gpr_defaults();
  params.values[2] = std::log(5.0);  // large noise -> nearly flat posterior
  const FittedSurrogate fit(params, data);
  AcquisitionConfig acq;
  Rng rng(43);
  const Eigen::VectorXd best = maximize_acquisition(fit, acq, constant_vec(2, -5.0),
                                                    constant_vec(2, 5.0), 3024, rng);
  const double best_val = ucb(fit.predict(best), acq.ucb_w);
  Rng probe_rng(44);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x(2);
    x << probe_rng.uniform(-5, 5), probe_rng.uniform(-5, 5);
    REQUIRE(best_val >= ucb(fit.predict(x), acq.ucb_w) - 1e-12);
  }
}

TEST_CASE("maximize_acquisition: recovers a quadratic argmax with w = 0") {
  Dataset data;
  for (int i = 0; i <= 10; ++i) {
    Eigen::VectorXd x(1);
    x << -2.0 + 0.4 * i;
    data.add(x, 0, -(x[0] - 0.7) * (x[0] - 0.7));
  }
  SurrogateParams params = SurrogateParams::gpr_defaults();
  params.values[2] = std::log(1e-8);
  const FittedSurrogate fit(params, data);
  AcquisitionConfig acq;
  acq.ucb_w = 0.0;
  Rng rng(47);
  const Eigen::VectorXd best = maximize_acquisition(fit, acq, constant_vec(1, -2.0),
                                                    constant_vec(1, 2.0), 2512, rng);
  // Dense grid oracle.
  double grid_best = -1e300, grid_x = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    Eigen::VectorXd x(1);
    x << -2.0 + 4.0 * i / 4000.0;
    const double v = fit.predict(x).mean;
    if (v > grid_best) {
      grid_best = v;
      grid_x = x[0];
    }
  }
  CHECK(std::abs(best[0] - grid_x) < 0.05);
}

TEST_CASE("maximize_acquisition: deterministic for a fixed seed") {
  SurrogateFixture fx;
  const FittedSurrogate fit(fx.params, fx.data);
  AcquisitionConfig acq;
  Rng r1(51), r2(51);
  const auto a = maximize_acquisition(fit, acq, constant_vec(2, -5.0),
                                      constant_vec(2, 5.0), 2000, r1);
  const auto b = maximize_acquisition(fit, acq, constant_vec(2, -5.0),
                                      constant_vec(2, 5.0), 2000, r2);
  CHECK(a == b);
}

TEST_CASE("optim: surrogate evaluations per generation stay within budget") {
  SurrogateFixture fx;
  const FittedSurrogate fit(fx.params, fx.data);
  Rng rng(53);
  EaParams params;
  auto f = [&](const Eigen::VectorXd& x) { return fit.predict(x).mean; };
  Population pop = fresh_pop(EaKind::kDe, params, 2, rng, f);

  const long before = surrogate_predict_count();
  const Population off = ea_step(pop, EaKind::kDe, params, f, constant_vec(2, -5.0),
                                 constant_vec(2, 5.0), rng);
  AcquisitionConfig acq;
  identify_promising(pop, off, fit, acq, 1);
  const long used = surrogate_predict_count() - before;
  CHECK(used <= 2 * params.pop_size + (pop.size() + off.size()));
}
