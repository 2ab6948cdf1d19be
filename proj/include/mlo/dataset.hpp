#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mlo {

/// Posterior summary consumed by acquisition functions. Models without a
/// variance estimate report 0.
struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Input/output scaling attached to a dataset: inputs min-max scaled by the
/// search bounds, targets standardized. Identity when absent.
struct Normalization {
  Eigen::VectorXd x_lo;
  Eigen::VectorXd x_scale;  // upper - lower, guarded positive
  double y_shift = 0.0;
  double y_scale = 1.0;

  Eigen::VectorXd normalize_x(const Eigen::VectorXd& x) const {
    return (x - x_lo).cwiseQuotient(x_scale);
  }
  double normalize_y(double y) const { return (y - y_shift) / y_scale; }
  double denormalize_y(double y) const { return y_shift + y_scale * y; }
  double denormalize_var(double v) const { return y_scale * y_scale * v; }

  static Normalization input_only(const Eigen::VectorXd& lower,
                                  const Eigen::VectorXd& upper);
};

struct Observation {
  Eigen::VectorXd x;
  int t = 0;  // environment index the sample was drawn in
  double y = 0.0;
};

/// Time-tagged observations plus an optional normalization record. Subsets
/// inherit the parent's record.
class Dataset {
 public:
  Dataset() = default;

  void add(Eigen::VectorXd x, int t, double y) {
    if (!obs_.empty() && x.size() != obs_.front().x.size())
      throw std::invalid_argument("dataset: inconsistent input dimension");
    if (!std::isfinite(y)) throw std::invalid_argument("dataset: non-finite target");
    obs_.push_back({std::move(x), t, y});
  }

  std::size_t size() const { return obs_.size(); }
  bool empty() const { return obs_.empty(); }
  int dim() const { return obs_.empty() ? 0 : static_cast<int>(obs_.front().x.size()); }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  const std::vector<Observation>& observations() const { return obs_; }

  void set_normalization(Normalization n) { norm_ = std::move(n); }
  const std::optional<Normalization>& normalization() const { return norm_; }

  /// Re-standardizes the target record against the current contents,
  /// keeping the input scaling. No-op without a record.
  void refresh_target_scaling();

  Dataset subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.norm_ = norm_;
    out.obs_.reserve(indices.size());
    for (auto i : indices) out.obs_.push_back(obs_.at(i));
    return out;
  }

  /// N x n matrix of normalized inputs (identity scaling when no record).
  Eigen::MatrixXd normalized_inputs() const;
  /// Normalized target vector.
  Eigen::VectorXd normalized_targets() const;

 private:
  std::vector<Observation> obs_;
  std::optional<Normalization> norm_;
};

}  // namespace mlo
