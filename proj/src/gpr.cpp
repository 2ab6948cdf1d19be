#include <Eigen/Cholesky>
#include <cmath>

#include "mlo/surrogate.hpp"

namespace mlo {

long& loss_grad_eval_count() {
  thread_local long count = 0;
  return count;
}

long& surrogate_predict_count() {
  thread_local long count = 0;
  return count;
}

void SurrogateParams::validate() const {
  if (kind == SurrogateKind::kGpr) {
    if (values.size() != 3)
      throw std::invalid_argument("gpr params: expected 3 values");
    for (int i = 0; i < 3; ++i)
      if (!std::isfinite(values[i]) || !std::isfinite(std::exp(values[i])))
        throw std::invalid_argument("gpr params: non-finite hyperparameter");
  } else {
    NnShape shape{input_dim};
    if (values.size() != shape.param_count())
      throw std::invalid_argument("nn params: wrong parameter count");
    if (!values.allFinite())
      throw std::invalid_argument("nn params: non-finite weight");
  }
}

SurrogateParams SurrogateParams::gpr_defaults() {
  SurrogateParams p;
  p.kind = SurrogateKind::kGpr;
  p.values.resize(3);
  p.values << std::log(1.0), std::log(1.0), std::log(0.01);
  return p;
}

namespace {

struct GprFactorization {
  Eigen::MatrixXd X;       // normalized inputs
  Eigen::VectorXd y;       // normalized targets
  Eigen::MatrixXd L;       // lower Cholesky of K (+ jitter)
  Eigen::VectorXd alpha;   // K^-1 y
  Eigen::MatrixXd dist2;   // pairwise squared distances
  double jitter = 0.0;
};

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X) {
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = sq.replicate(1, X.rows()) + sq.transpose().replicate(X.rows(), 1) -
                       2.0 * X * X.transpose();
  return d2.cwiseMax(0.0);
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& dist2, double lengthscale,
                           double signal_var) {
  return signal_var * (-dist2 / (2.0 * lengthscale * lengthscale)).array().exp().matrix();
}

GprFactorization factorize(const SurrogateParams& params, const Dataset& data) {
  if (params.kind != SurrogateKind::kGpr)
    throw std::invalid_argument("gpr: wrong surrogate kind");
  if (data.empty()) throw std::invalid_argument("gpr: empty dataset");
  params.validate();

  GprFactorization f;
  f.X = data.normalized_inputs();
  f.y = data.normalized_targets();
  f.dist2 = squared_distances(f.X);

  const double l = params.lengthscale();
  const double sf2 = params.signal_var();
  const double sn2 = params.noise_var();

  Eigen::MatrixXd K = rbf_kernel(f.dist2, l, sf2);
  K.diagonal().array() += sn2;
  const double diag_mean = K.diagonal().mean();

  // Plain factorization first; escalate relative jitter 1e-10..1e-4 on failure.
  for (int exp10 = -11; exp10 <= -4; ++exp10) {
    const double rel = exp10 < -10 ? 0.0 : std::pow(10.0, exp10);
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += rel * diag_mean;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      f.L = llt.matrixL();
      f.alpha = llt.solve(f.y);
      f.jitter = rel * diag_mean;
      return f;
    }
  }
  throw NumericalError("gpr: covariance not positive definite after max jitter");
}

double nll_from(const GprFactorization& f) {
  const double n = static_cast<double>(f.y.size());
  const double log_det = 2.0 * f.L.diagonal().array().log().sum();
  return 0.5 * f.y.dot(f.alpha) + 0.5 * log_det + 0.5 * n * std::log(2.0 * M_PI);
}

}  // namespace

double gpr_loss(const SurrogateParams& params, const Dataset& data) {
  return nll_from(factorize(params, data));
}

Eigen::Vector3d gpr_loss_grad(const SurrogateParams& params, const Dataset& data) {
  ++loss_grad_eval_count();
  GprFactorization f = factorize(params, data);

  const double l = params.lengthscale();
  const double sf2 = params.signal_var();
  const double sn2 = params.noise_var();
  const long n = f.X.rows();

  // A = K^-1 - alpha alpha'; grad_j = 0.5 * sum(A .* dK/dtheta_j).
  Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(n, n);
  f.L.triangularView<Eigen::Lower>().solveInPlace(Kinv);
  f.L.transpose().triangularView<Eigen::Upper>().solveInPlace(Kinv);
  const Eigen::MatrixXd A = Kinv - f.alpha * f.alpha.transpose();

  const Eigen::MatrixXd S = rbf_kernel(f.dist2, l, sf2);  // noise-free part
  const Eigen::MatrixXd dK_dlogl = S.cwiseProduct(f.dist2) / (l * l);

  Eigen::Vector3d grad;
  grad[0] = 0.5 * A.cwiseProduct(dK_dlogl).sum();
  grad[1] = 0.5 * A.cwiseProduct(S).sum();
  grad[2] = 0.5 * sn2 * A.trace();
  return grad;
}

Prediction gpr_predict(const SurrogateParams& params, const Dataset& data,
                       const Eigen::VectorXd& x) {
  FittedSurrogate fit(params, data);
  return fit.predict(x);
}

double surrogate_loss(const SurrogateParams& params, const Dataset& data) {
  return params.kind == SurrogateKind::kGpr ? gpr_loss(params, data)
                                            : nn_loss(params, data);
}

Eigen::VectorXd surrogate_loss_grad(const SurrogateParams& params, const Dataset& data) {
  if (params.kind == SurrogateKind::kGpr) {
    Eigen::Vector3d g = gpr_loss_grad(params, data);
    return Eigen::VectorXd(g);
  }
  return nn_loss_grad(params, data);
}

Prediction surrogate_predict(const SurrogateParams& params, const Dataset& data,
                             const Eigen::VectorXd& x) {
  return params.kind == SurrogateKind::kGpr ? gpr_predict(params, data, x)
                                            : nn_predict(params, data, x);
}

FittedSurrogate::FittedSurrogate(const SurrogateParams& params, const Dataset& data)
    : params_(params), norm_(data.normalization()) {
  if (params_.kind == SurrogateKind::kGpr) {
    GprFactorization f = factorize(params_, data);
    train_inputs_ = std::move(f.X);
    chol_lower_ = std::move(f.L);
    alpha_ = std::move(f.alpha);
  } else {
    params_.validate();
  }
}

Prediction FittedSurrogate::predict(const Eigen::VectorXd& x) const {
  ++surrogate_predict_count();
  if (params_.kind == SurrogateKind::kNn) {
    // Forward pass handles its own normalization via a throwaway dataset
    // carrier; keep it local to avoid copying data.
    Dataset carrier;
    if (norm_) carrier.set_normalization(*norm_);
    return nn_predict(params_, carrier, x);
  }

  const Eigen::VectorXd xn = norm_ ? norm_->normalize_x(x) : x;
  const double l = params_.lengthscale();
  const double sf2 = params_.signal_var();

  const Eigen::VectorXd d2 =
      (train_inputs_.rowwise() - xn.transpose()).rowwise().squaredNorm();
  const Eigen::VectorXd kstar =
      sf2 * (-d2.array() / (2.0 * l * l)).exp().matrix();

  Prediction pred;
  const double mean = kstar.dot(alpha_);
  const Eigen::VectorXd v = chol_lower_.triangularView<Eigen::Lower>().solve(kstar);
  const double var = std::max(0.0, sf2 - v.squaredNorm());
  pred.mean = norm_ ? norm_->denormalize_y(mean) : mean;
  pred.variance = norm_ ? norm_->denormalize_var(var) : var;
  return pred;
}

}  // namespace mlo
