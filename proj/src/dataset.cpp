#include "mlo/dataset.hpp"

#include <cmath>

namespace mlo {

Normalization Normalization::input_only(const Eigen::VectorXd& lower,
                                        const Eigen::VectorXd& upper) {
  Normalization n;
  n.x_lo = lower;
  n.x_scale = (upper - lower).cwiseMax(1e-300);
  return n;
}

void Dataset::refresh_target_scaling() {
  if (!norm_ || obs_.empty()) return;
  double mean = 0.0;
  for (const auto& o : obs_) mean += o.y;
  mean /= static_cast<double>(obs_.size());
  double var = 0.0;
  for (const auto& o : obs_) var += (o.y - mean) * (o.y - mean);
  var /= static_cast<double>(obs_.size());
  norm_->y_shift = mean;
  norm_->y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
}

Eigen::MatrixXd Dataset::normalized_inputs() const {
  Eigen::MatrixXd X(obs_.size(), dim());
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const Eigen::VectorXd xn = norm_ ? norm_->normalize_x(obs_[i].x) : obs_[i].x;
    X.row(i) = xn.transpose();
  }
  return X;
}

Eigen::VectorXd Dataset::normalized_targets() const {
  Eigen::VectorXd y(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i)
    y[i] = norm_ ? norm_->normalize_y(obs_[i].y) : obs_[i].y;
  return y;
}

}  // namespace mlo
