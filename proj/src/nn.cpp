#include <array>
#include <cmath>

#include "mlo/surrogate.hpp"

namespace mlo {

namespace {

constexpr int kH = NnShape::kHidden;

/// Views into the flat parameter vector, one (W, b) pair per layer.
/// Weights are column-major (out x in).
struct LayerView {
  Eigen::Map<const Eigen::MatrixXd> W;
  Eigen::Map<const Eigen::VectorXd> b;
};

std::array<int, 4> layer_inputs(int input_dim) { return {input_dim, kH, kH, kH}; }
std::array<int, 4> layer_outputs() { return {kH, kH, kH, 1}; }

std::array<LayerView, 4> view_layers(const SurrogateParams& p) {
  const auto ins = layer_inputs(p.input_dim);
  const auto outs = layer_outputs();
  const double* base = p.values.data();
  std::size_t off = 0;
  auto make = [&](int li) {
    LayerView v{Eigen::Map<const Eigen::MatrixXd>(base + off, outs[li], ins[li]),
                Eigen::Map<const Eigen::VectorXd>(
                    base + off + static_cast<std::size_t>(outs[li]) * ins[li], outs[li])};
    off += static_cast<std::size_t>(outs[li]) * ins[li] + outs[li];
    return v;
  };
  return {make(0), make(1), make(2), make(3)};
}

struct ForwardPass {
  std::array<Eigen::VectorXd, 4> pre;   // pre-activations per layer
  std::array<Eigen::VectorXd, 4> post;  // post-activations (ReLU; last linear)
  double output = 0.0;
};

ForwardPass forward(const std::array<LayerView, 4>& layers, const Eigen::VectorXd& x) {
  ForwardPass f;
  Eigen::VectorXd h = x;
  for (int li = 0; li < 4; ++li) {
    f.pre[li] = layers[li].W * h + layers[li].b;
    f.post[li] = li < 3 ? f.pre[li].cwiseMax(0.0) : f.pre[li];
    h = f.post[li];
  }
  f.output = f.post[3][0];
  return f;
}

}  // namespace

SurrogateParams SurrogateParams::nn_init(int input_dim, Rng& rng) {
  SurrogateParams p;
  p.kind = SurrogateKind::kNn;
  p.input_dim = input_dim;
  p.values = Eigen::VectorXd::Zero(NnShape{input_dim}.param_count());

  const auto ins = layer_inputs(input_dim);
  const auto outs = layer_outputs();
  std::size_t off = 0;
  for (int li = 0; li < 4; ++li) {
    const double bound = std::sqrt(6.0 / ins[li]);
    const std::size_t n_w = static_cast<std::size_t>(outs[li]) * ins[li];
    for (std::size_t i = 0; i < n_w; ++i) p.values[off + i] = rng.uniform(-bound, bound);
    off += n_w + outs[li];  // biases stay zero
  }
  return p;
}

double nn_loss(const SurrogateParams& params, const Dataset& data) {
  if (params.kind != SurrogateKind::kNn)
    throw std::invalid_argument("nn: wrong surrogate kind");
  if (data.empty()) throw std::invalid_argument("nn: empty dataset");
  params.validate();

  const auto layers = view_layers(params);
  const Eigen::MatrixXd X = data.normalized_inputs();
  const Eigen::VectorXd y = data.normalized_targets();
  double sse = 0.0;
  for (long i = 0; i < X.rows(); ++i) {
    const double out = forward(layers, X.row(i).transpose()).output;
    sse += (out - y[i]) * (out - y[i]);
  }
  return sse / static_cast<double>(X.rows());
}

Eigen::VectorXd nn_loss_grad(const SurrogateParams& params, const Dataset& data) {
  if (params.kind != SurrogateKind::kNn)
    throw std::invalid_argument("nn: wrong surrogate kind");
  if (data.empty()) throw std::invalid_argument("nn: empty dataset");
  params.validate();
  ++loss_grad_eval_count();

  const auto layers = view_layers(params);
  const auto ins = layer_inputs(params.input_dim);
  const auto outs = layer_outputs();
  const Eigen::MatrixXd X = data.normalized_inputs();
  const Eigen::VectorXd y = data.normalized_targets();
  const double n = static_cast<double>(X.rows());

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.values.size());
  std::array<std::size_t, 4> offsets{};
  {
    std::size_t off = 0;
    for (int li = 0; li < 4; ++li) {
      offsets[li] = off;
      off += static_cast<std::size_t>(outs[li]) * ins[li] + outs[li];
    }
  }

  for (long i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    const ForwardPass f = forward(layers, x);

    // delta at the output, then backpropagate through the ReLU stack.
    Eigen::VectorXd delta(1);
    delta[0] = 2.0 * (f.output - y[i]) / n;
    for (int li = 3; li >= 0; --li) {
      const Eigen::VectorXd& input = li == 0 ? x : f.post[li - 1];
      Eigen::Map<Eigen::MatrixXd> gW(grad.data() + offsets[li], outs[li], ins[li]);
      Eigen::Map<Eigen::VectorXd> gb(
          grad.data() + offsets[li] + static_cast<std::size_t>(outs[li]) * ins[li],
          outs[li]);
      gW += delta * input.transpose();
      gb += delta;
      if (li > 0) {
        Eigen::VectorXd back = layers[li].W.transpose() * delta;
        delta = (f.pre[li - 1].array() > 0.0).select(back, 0.0);
      }
    }
  }
  return grad;
}

Prediction nn_predict(const SurrogateParams& params, const Dataset& data,
                      const Eigen::VectorXd& x) {
  if (params.kind != SurrogateKind::kNn)
    throw std::invalid_argument("nn: wrong surrogate kind");
  params.validate();
  const auto& norm = data.normalization();
  const Eigen::VectorXd xn = norm ? norm->normalize_x(x) : x;
  const double out = forward(view_layers(params), xn).output;
  Prediction pred;
  pred.mean = norm ? norm->denormalize_y(out) : out;
  pred.variance = 0.0;
  return pred;
}

}  // namespace mlo
