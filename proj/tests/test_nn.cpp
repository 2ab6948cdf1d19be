#include <doctest.h>

#include "mlo/surrogate.hpp"
#include "oracles.hpp"

using namespace mlo;

TEST_CASE("nn: parameter count matches the architecture") {
  CHECK(NnShape{4}.param_count() == 40 * 4 + 40 + 2 * (1600 + 40) + 41);
  Rng rng(1);
  const SurrogateParams p = SurrogateParams::nn_init(4, rng);
  CHECK(p.values.size() == NnShape{4}.param_count());
  CHECK(p.values.allFinite());
}

TEST_CASE("nn_loss: zero weights and zero targets give zero loss") {
  SurrogateParams p;
  p.kind = SurrogateKind::kNn;
  p.input_dim = 2;
  p.values = Eigen::VectorXd::Zero(NnShape{2}.param_count());
  Dataset data;
  data.add(Eigen::VectorXd::Constant(2, 0.3), 0, 0.0);
  data.add(Eigen::VectorXd::Constant(2, -0.4), 0, 0.0);
  CHECK(nn_loss(p, data) == 0.0);
}

TEST_CASE("nn_loss: single point is the squared residual") {
  Rng rng(7);
  const SurrogateParams p = SurrogateParams::nn_init(3, rng);
  Dataset data;
  Eigen::VectorXd x(3);
  x << 0.2, -0.1, 0.5;
  const double y = 1.3;
  data.add(x, 0, y);
  const double out = nn_predict(p, data, x).mean;
  CHECK(nn_loss(p, data) == doctest::Approx((out - y) * (out - y)));
}

TEST_CASE("nn: forward pass matches an independently coded oracle") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int dims = 1 + static_cast<int>(rng.uniform_index(4));
    const SurrogateParams p = SurrogateParams::nn_init(dims, rng);
    Eigen::VectorXd x(dims);
    for (int d = 0; d < dims; ++d) x[d] = rng.uniform(-2, 2);
    Dataset carrier;  // identity normalization
    const double got = nn_predict(p, carrier, x).mean;
    const double want = oracle::mlp_forward_direct(p.values, dims, x);
    REQUIRE(oracle::rel_err(got, want) < 1e-12);
  }
}

TEST_CASE("nn_loss: random case matches the oracle forward pass") {
  Rng rng(13);
  const SurrogateParams p = SurrogateParams::nn_init(2, rng);
  const Dataset data = oracle::random_dataset(7, 2, rng);
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double out = oracle::mlp_forward_direct(p.values, 2, data[i].x);
    sse += (out - data[i].y) * (out - data[i].y);
  }
  CHECK(oracle::rel_err(nn_loss(p, data), sse / data.size()) < 1e-12);
}

TEST_CASE("nn_loss_grad: matches central finite differences away from kinks") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const SurrogateParams p = SurrogateParams::nn_init(2, rng);
    const Dataset data = oracle::random_dataset(4, 2, rng);
    const Eigen::VectorXd got = nn_loss_grad(p, data);
    REQUIRE(got.size() == p.values.size());
    // Spot-check a deterministic subset of coordinates; full FD over ~3.4k
    // parameters x 20 reps is needlessly slow.
    for (int k = 0; k < 60; ++k) {
      const int idx =
          static_cast<int>((k * 2654435761u) % static_cast<unsigned>(p.values.size()));
      Eigen::VectorXd hi = p.values, lo = p.values;
      hi[idx] += 1e-5;
      lo[idx] -= 1e-5;
      SurrogateParams ph = p, pl = p;
      ph.values = hi;
      pl.values = lo;
      const double fd = (nn_loss(ph, data) - nn_loss(pl, data)) / 2e-5;
      REQUIRE(std::abs(got[idx] - fd) / std::max(1e-4, std::abs(fd)) < 1e-4);
    }
  }
}

TEST_CASE("nn_loss_grad: symmetric zero case has zero gradient") {
  SurrogateParams p;
  p.kind = SurrogateKind::kNn;
  p.input_dim = 1;
  p.values = Eigen::VectorXd::Zero(NnShape{1}.param_count());
  Dataset data;
  data.add(Eigen::VectorXd::Zero(1), 0, 0.0);
  CHECK(nn_loss_grad(p, data).norm() == 0.0);
}

TEST_CASE("nn: plain gradient descent drives the gradient norm below 1e-3") {
  Rng rng(19);
  SurrogateParams p = SurrogateParams::nn_init(1, rng);
  Dataset data;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd x(1);
    x << -1.0 + 0.5 * i;
    data.add(x, 0, 0.3 * x[0] + 0.1);
  }
  double grad_norm = 1e9;
  for (int it = 0; it < 4000 && grad_norm >= 1e-3; ++it) {
    const Eigen::VectorXd g = nn_loss_grad(p, data);
    grad_norm = g.norm();
    p.values -= 0.05 * g;
  }
  CHECK(grad_norm < 1e-3);
}

TEST_CASE("nn_predict: dead ReLU region outputs the final bias") {
  Rng rng(23);
  SurrogateParams p = SurrogateParams::nn_init(1, rng);
  // Force strongly negative hidden biases so every hidden unit is dead.
  NnShape shape{1};
  std::size_t off = 0;
  const int outs[4] = {40, 40, 40, 1};
  const int ins[4] = {1, 40, 40, 40};
  for (int layer = 0; layer < 4; ++layer) {
    off += static_cast<std::size_t>(outs[layer]) * ins[layer];
    for (int r = 0; r < outs[layer]; ++r)
      p.values[off + r] = layer < 3 ? -100.0 : 2.5;  // final bias 2.5
    off += outs[layer];
  }
  Dataset carrier;
  Eigen::VectorXd x(1);
  x << 0.2;
  CHECK(nn_predict(p, carrier, x).mean == doctest::Approx(2.5));
  CHECK(nn_predict(p, carrier, x).variance == 0.0);
  (void)shape;
}

TEST_CASE("nn_predict: pure function, identical output on repeat calls") {
  Rng rng(29);
  const SurrogateParams p = SurrogateParams::nn_init(3, rng);
  Dataset carrier;
  Eigen::VectorXd x(3);
  x << 0.1, 0.2, 0.3;
  CHECK(nn_predict(p, carrier, x).mean == nn_predict(p, carrier, x).mean);
}
