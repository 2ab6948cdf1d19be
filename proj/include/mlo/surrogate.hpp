#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "mlo/dataset.hpp"
#include "mlo/rng.hpp"

namespace mlo {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SurrogateKind { kGpr, kNn };

/// MLP layout shared by the NN loss/gradient/forward code: input -> three
/// hidden ReLU layers of width 40 -> scalar linear output.
struct NnShape {
  int input_dim = 1;
  static constexpr int kHidden = 40;
  static constexpr int kHiddenLayers = 3;
  int param_count() const {
    return (input_dim * kHidden + kHidden) + 2 * (kHidden * kHidden + kHidden) +
           (kHidden + 1);
  }
};

/// Flat parameter vector of a differentiable surrogate.
///   GPR: values = (log lengthscale, log signal variance, log noise variance)
///   NN:  values = concatenated [W, b] per layer, column-major weights
struct SurrogateParams {
  SurrogateKind kind = SurrogateKind::kGpr;
  int input_dim = 0;  // used by the NN layout; ignored by GPR
  Eigen::VectorXd values;

  void validate() const;

  double lengthscale() const { return std::exp(values[0]); }
  double signal_var() const { return std::exp(values[1]); }
  double noise_var() const { return std::exp(values[2]); }

  /// l = 1, sigma_f^2 = 1, sigma_n^2 = 0.01.
  static SurrogateParams gpr_defaults();
  /// Kaiming-uniform fan-in weight init, zero biases.
  static SurrogateParams nn_init(int input_dim, Rng& rng);
};

// Instrumentation used by tests: per-thread counters of loss-gradient
// evaluations and surrogate predictions.
long& loss_grad_eval_count();
long& surrogate_predict_count();

/// Negative log marginal likelihood of an RBF-kernel GP,
/// 0.5 y'K^-1 y + 0.5 log|K| + (N/2) log 2pi, via Cholesky with jitter
/// escalation on failure.
double gpr_loss(const SurrogateParams& params, const Dataset& data);

/// Analytic NLL gradient w.r.t. the log-space hyperparameters:
/// dNLL/dtheta_j = -0.5 tr[(aa' - K^-1) dK/dtheta_j], a = K^-1 y.
Eigen::Vector3d gpr_loss_grad(const SurrogateParams& params, const Dataset& data);

/// GP posterior at x, de-normalized by the dataset's record.
Prediction gpr_predict(const SurrogateParams& params, const Dataset& data,
                       const Eigen::VectorXd& x);

/// Mean squared error of the MLP forward pass in normalized space.
double nn_loss(const SurrogateParams& params, const Dataset& data);

/// Backpropagation gradient of the MSE, same length as the flat vector.
Eigen::VectorXd nn_loss_grad(const SurrogateParams& params, const Dataset& data);

/// Forward pass; variance is reported as 0.
Prediction nn_predict(const SurrogateParams& params, const Dataset& data,
                      const Eigen::VectorXd& x);

// Kind dispatchers used by the meta-learning loop.
double surrogate_loss(const SurrogateParams& params, const Dataset& data);
Eigen::VectorXd surrogate_loss_grad(const SurrogateParams& params, const Dataset& data);
Prediction surrogate_predict(const SurrogateParams& params, const Dataset& data,
                             const Eigen::VectorXd& x);

/// Trained surrogate with cached factorization for repeated predictions
/// (the acquisition maximizer issues thousands of them).
class FittedSurrogate {
 public:
  FittedSurrogate(const SurrogateParams& params, const Dataset& data);

  Prediction predict(const Eigen::VectorXd& x) const;
  const SurrogateParams& params() const { return params_; }

 private:
  SurrogateParams params_;
  std::optional<Normalization> norm_;
  // GPR cache
  Eigen::MatrixXd train_inputs_;
  Eigen::MatrixXd chol_lower_;
  Eigen::VectorXd alpha_;
};

}  // namespace mlo
