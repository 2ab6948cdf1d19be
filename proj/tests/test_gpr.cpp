#include <doctest.h>

#include "mlo/surrogate.hpp"
#include "oracles.hpp"

using namespace mlo;

namespace {

SurrogateParams gpr_params(double l, double sf2, double sn2) {
  SurrogateParams p = SurrogateParams::gpr_defaults();
  p.values << std::log(l), std::log(sf2), std::log(sn2);
  return p;
}

}  // namespace

TEST_CASE("gpr_loss: single zero observation has the closed-form NLL") {
  Dataset data;
  data.add(Eigen::VectorXd::Zero(1), 0, 0.0);
  const double nll = gpr_loss(SurrogateParams::gpr_defaults(), data);
  // 0.5 log(2 pi) + 0.5 log(1.01)
  CHECK(nll == doctest::Approx(0.9239137).epsilon(1e-5));
  CHECK(oracle::rel_err(nll, 0.5 * std::log(2.0 * M_PI) + 0.5 * std::log(1.01)) < 1e-12);
}

TEST_CASE("gpr_loss: all-zero targets reduce to the complexity terms") {
  Rng rng(3);
  Dataset data;
  for (int i = 0; i < 6; ++i) {
    Eigen::VectorXd x(2);
    x << rng.uniform(), rng.uniform();
    data.add(x, 0, 0.0);
  }
  const auto params = gpr_params(0.7, 1.3, 0.05);
  const double nll = gpr_loss(params, data);
  // Data-fit term vanishes; compare against the direct evaluation with y=0.
  const double expected = oracle::gp_nll_direct(data.normalized_inputs(),
                                                Eigen::VectorXd::Zero(6), 0.7, 1.3, 0.05);
  CHECK(oracle::rel_err(nll, expected) < 1e-10);
}

TEST_CASE("gpr_loss: matches the direct-inverse oracle on random 5-point data") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset data = oracle::random_dataset(5, 2, rng);
    const auto params = gpr_params(rng.uniform(0.3, 2.0), rng.uniform(0.5, 2.0),
                                   rng.uniform(0.005, 0.1));
    const double got = gpr_loss(params, data);
    const double want =
        oracle::gp_nll_direct(data.normalized_inputs(), data.normalized_targets(),
                              params.lengthscale(), params.signal_var(),
                              params.noise_var());
    REQUIRE(oracle::rel_err(got, want) < 1e-10);
  }
}

TEST_CASE("gpr_loss_grad: matches central finite differences") {
  Rng rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset data = oracle::random_dataset(6, 2, rng);
    SurrogateParams params = gpr_params(rng.uniform(0.3, 2.0), rng.uniform(0.5, 2.0),
                                        rng.uniform(0.01, 0.2));
    const Eigen::Vector3d got = gpr_loss_grad(params, data);
    const Eigen::VectorXd want = oracle::fd_gradient(
        [&](const Eigen::VectorXd& v) {
          SurrogateParams p = params;
          p.values = v;
          return gpr_loss(p, data);
        },
        params.values);
    for (int i = 0; i < 3; ++i)
      REQUIRE(std::abs(got[i] - want[i]) / std::max(1e-8, std::abs(want[i])) < 1e-4);
  }
}

TEST_CASE("gpr_loss_grad: zero targets leave only the complexity gradient") {
  Dataset data;
  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd x(1);
    x << rng.uniform(-1, 1);
    data.add(x, 0, 0.0);
  }
  const auto params = gpr_params(1.0, 1.0, 0.01);
  const Eigen::Vector3d got = gpr_loss_grad(params, data);
  const Eigen::VectorXd want = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) {
        SurrogateParams p = params;
        p.values = v;
        return gpr_loss(p, data);  // with y = 0 this is 0.5 log|K| + const
      },
      params.values);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-6);
}

TEST_CASE("gpr_loss_grad: duplicated inputs, noise-gradient sign agrees with FD") {
  Dataset data;
  Eigen::VectorXd x(1);
  x << 0.4;
  data.add(x, 0, 1.0);
  data.add(x, 0, -1.0);  // same input, conflicting targets -> noise matters
  data.add(Eigen::VectorXd::Constant(1, -0.3), 0, 0.2);
  const auto params = gpr_params(1.0, 1.0, 0.5);
  const Eigen::Vector3d got = gpr_loss_grad(params, data);
  const Eigen::VectorXd fd = oracle::fd_gradient(
      [&](const Eigen::VectorXd& v) {
        SurrogateParams p = params;
        p.values = v;
        return gpr_loss(p, data);
      },
      params.values);
  CHECK(got[2] * fd[2] > 0.0);
}

TEST_CASE("gpr_predict: interpolates training points as noise vanishes") {
  Rng rng(31);
  Dataset data = oracle::random_dataset(5, 1, rng);
  const auto params = gpr_params(1.0, 1.0, 1e-10);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Prediction pred = gpr_predict(params, data, data[i].x);
    CHECK(std::abs(pred.mean - data[i].y) < 1e-6);
  }
}

TEST_CASE("gpr_predict: reverts to the prior far away from data") {
  Dataset data;
  data.add(Eigen::VectorXd::Zero(1), 0, 0.7);
  const auto params = gpr_params(0.5, 1.5, 0.01);
  Eigen::VectorXd far(1);
  far << 50.0;
  const Prediction pred = gpr_predict(params, data, far);
  CHECK(std::abs(pred.mean) < 1e-8);
  CHECK(pred.variance == doctest::Approx(1.5).epsilon(1e-8));
}

TEST_CASE("gpr_predict: matches the direct-inverse oracle") {
  Rng rng(37);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset data = oracle::random_dataset(5, 2, rng);
    const auto params = gpr_params(rng.uniform(0.4, 1.5), rng.uniform(0.5, 2.0),
                                   rng.uniform(0.01, 0.1));
    Eigen::VectorXd x(2);
    x << rng.uniform(-1, 1), rng.uniform(-1, 1);
    const Prediction got = gpr_predict(params, data, x);
    const auto [mean, var] = oracle::gp_posterior_direct(
        data.normalized_inputs(), data.normalized_targets(), x, params.lengthscale(),
        params.signal_var(), params.noise_var());
    REQUIRE(oracle::rel_err(got.mean, mean) < 1e-8);
    REQUIRE(std::abs(got.variance - var) < 1e-8 * std::max(1.0, std::abs(var)));
  }
}

TEST_CASE("gpr: posterior variance stays within [0, signal_var]") {
  Rng rng(41);
  const Dataset data = oracle::random_dataset(8, 2, rng);
  const auto params = gpr_params(0.8, 1.7, 0.05);
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd x(2);
    x << rng.uniform(-3, 3), rng.uniform(-3, 3);
    const Prediction pred = gpr_predict(params, data, x);
    REQUIRE(pred.variance >= 0.0);
    REQUIRE(pred.variance <= params.signal_var() + 1e-12);
  }
}

TEST_CASE("gpr: NLL invariant under dataset permutation") {
  Rng rng(43);
  Dataset data = oracle::random_dataset(7, 2, rng);
  std::vector<std::size_t> perm{6, 2, 4, 0, 5, 1, 3};
  const Dataset shuffled = data.subset(perm);
  const auto params = gpr_params(0.9, 1.1, 0.02);
  CHECK(gpr_loss(params, data) == doctest::Approx(gpr_loss(params, shuffled)));
}

TEST_CASE("gpr: exact duplicates survive via jitter and agree on predictions") {
  Dataset data;
  Rng rng(47);
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd x(1);
    x << rng.uniform(-1, 1);
    data.add(x, 0, std::cos(x[0]));
  }
  Dataset doubled = data;
  for (std::size_t i = 0; i < data.size(); ++i) doubled.add(data[i].x, 0, data[i].y);

  const auto params = gpr_params(1.0, 1.0, 1e-9);  // nearly singular without jitter
  Eigen::VectorXd x(1);
  x << 0.123;
  const Prediction a = gpr_predict(params, data, x);
  const Prediction b = gpr_predict(params, doubled, x);
  CHECK(std::abs(a.mean - b.mean) < 1e-4);
}

TEST_CASE("gpr: empty dataset and wrong kind rejected") {
  Dataset empty;
  CHECK_THROWS_AS(gpr_loss(SurrogateParams::gpr_defaults(), empty),
                  std::invalid_argument);
  Rng rng(1);
  SurrogateParams nn = SurrogateParams::nn_init(2, rng);
  const Dataset data = oracle::random_dataset(3, 2, rng);
  CHECK_THROWS_AS(gpr_loss(nn, data), std::invalid_argument);
}
