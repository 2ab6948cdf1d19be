#include "mlo/metalearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mlo {

void MetaConfig::validate() const {
  if (few_shot_k < 1) throw std::invalid_argument("meta: few_shot_k must be positive");
  if (tasks_per_batch < 1)
    throw std::invalid_argument("meta: tasks_per_batch must be positive");
  if (!(inner_lr > 0.0) || !(outer_lr > 0.0))
    throw std::invalid_argument("meta: learning rates must be positive");
  if (max_epochs < 0) throw std::invalid_argument("meta: max_epochs must be >= 0");
  if (!(convergence_tol > 0.0))
    throw std::invalid_argument("meta: convergence_tol must be positive");
  if (adapt_max_iters < 0 || !(adapt_tol > 0.0))
    throw std::invalid_argument("meta: invalid adaptation settings");
}

TaskSplit sample_split(const Dataset& data, int k, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("sample_split: empty dataset");
  const std::size_t n = data.size();
  const auto uk = static_cast<std::size_t>(k);
  TaskSplit split;
  if (n >= 2 * uk) {
    // Disjoint draw without replacement: partial Fisher-Yates over indices.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < 2 * uk; ++i)
      std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
    split.support = data.subset({idx.begin(), idx.begin() + k});
    split.query = data.subset({idx.begin() + k, idx.begin() + 2 * k});
  } else {
    std::vector<std::size_t> s(uk), q(uk);
    for (auto& i : s) i = rng.uniform_index(n);
    for (auto& i : q) i = rng.uniform_index(n);
    split.support = data.subset(s);
    split.query = data.subset(q);
  }
  return split;
}

SurrogateParams inner_step(const SurrogateParams& theta, const Dataset& support,
                           double alpha) {
  SurrogateParams out = theta;
  out.values = theta.values - alpha * surrogate_loss_grad(theta, support);
  return out;
}

double meta_loss(const SurrogateParams& theta, std::span<const TaskSplit> tasks,
                 double alpha) {
  if (tasks.empty()) throw std::invalid_argument("meta_loss: no tasks");
  double total = 0.0;
  for (const auto& task : tasks)
    total += surrogate_loss(inner_step(theta, task.support, alpha), task.query);
  return total;
}

namespace {

/// 3x3 Hessian of the GPR support loss via central differences of the
/// analytic gradient; cheap at three hyperparameters.
Eigen::Matrix3d gpr_support_hessian(const SurrogateParams& theta, const Dataset& support) {
  constexpr double h = 1e-6;
  Eigen::Matrix3d H;
  for (int j = 0; j < 3; ++j) {
    SurrogateParams hi = theta, lo = theta;
    hi.values[j] += h;
    lo.values[j] -= h;
    H.col(j) = (gpr_loss_grad(hi, support) - gpr_loss_grad(lo, support)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

/// Outer gradient of one task's adapted query loss w.r.t. theta.
Eigen::VectorXd outer_task_grad(const SurrogateParams& theta, const TaskSplit& task,
                                double alpha, bool first_order) {
  const SurrogateParams adapted = inner_step(theta, task.support, alpha);
  Eigen::VectorXd g_query = surrogate_loss_grad(adapted, task.query);
  if (first_order) return g_query;
  if (theta.kind != SurrogateKind::kGpr)
    throw std::invalid_argument("meta: exact outer gradient is GPR-only");
  // d theta'/d theta = I - alpha * H(theta, support).
  const Eigen::Matrix3d H = gpr_support_hessian(theta, task.support);
  return (Eigen::Matrix3d::Identity() - alpha * H).transpose() * g_query;
}

}  // namespace

std::pair<SurrogateParams, MetaTrace> meta_learn(const TaskArchive& archive,
                                                 const MetaConfig& config,
                                                 const SurrogateParams& theta_init,
                                                 Rng& rng) {
  config.validate();
  if (archive.empty()) throw std::invalid_argument("meta_learn: empty archive");

  SurrogateParams theta = theta_init;
  MetaTrace trace;
  const int m = std::min<int>(config.tasks_per_batch,
                              static_cast<int>(archive.size()));
  double loss_sum = 0.0;
  double prev_loss = std::numeric_limits<double>::quiet_NaN();

  for (int batch = 0; batch < config.max_epochs; ++batch) {
    // Sample m environments uniformly with replacement, split each into
    // support/query.
    std::vector<TaskSplit> tasks;
    tasks.reserve(m);
    for (int i = 0; i < m; ++i) {
      const auto env = rng.uniform_index(archive.size());
      tasks.push_back(sample_split(archive.environments[env], config.few_shot_k, rng));
    }

    Eigen::VectorXd outer_grad = Eigen::VectorXd::Zero(theta.values.size());
    double batch_loss = 0.0;
    for (const auto& task : tasks) {
      outer_grad += outer_task_grad(theta, task, config.inner_lr, config.first_order);
      batch_loss += surrogate_loss(inner_step(theta, task.support, config.inner_lr),
                                   task.query);
    }

    const Eigen::VectorXd before = theta.values;
    theta.values -= config.outer_lr * outer_grad;

    loss_sum += batch_loss;
    MetaBatchRecord rec;
    rec.batch = batch;
    rec.avg_loss = loss_sum / static_cast<double>(batch + 1);
    rec.params = theta.values;
    trace.records.push_back(std::move(rec));

    const double step_rel = (theta.values - before).norm() / (1.0 + before.norm());
    const double loss_rel =
        batch > 0 ? std::abs(batch_loss - prev_loss) / (1.0 + std::abs(prev_loss))
                  : std::numeric_limits<double>::infinity();
    if (step_rel < config.convergence_tol && loss_rel < config.convergence_tol) break;
    prev_loss = batch_loss;
  }
  return {std::move(theta), std::move(trace)};
}

namespace {

SurrogateParams descend(SurrogateParams theta, const Dataset& data,
                        const MetaConfig& config) {
  double loss = surrogate_loss(theta, data);
  if (config.use_adam) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.values.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.values.size());
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int it = 1; it <= config.adapt_max_iters; ++it) {
      const Eigen::VectorXd g = surrogate_loss_grad(theta, data);
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      const Eigen::VectorXd mh = m / (1.0 - std::pow(b1, it));
      const Eigen::VectorXd vh = v / (1.0 - std::pow(b2, it));
      theta.values -= config.outer_lr * (mh.array() / (vh.array().sqrt() + eps)).matrix();
      const double next = surrogate_loss(theta, data);
      if (loss - next < config.adapt_tol && it > 1) {
        loss = next;
        break;
      }
      loss = next;
    }
    return theta;
  }

  for (int it = 0; it < config.adapt_max_iters; ++it) {
    const Eigen::VectorXd g = surrogate_loss_grad(theta, data);
    SurrogateParams candidate = theta;
    candidate.values = theta.values - config.outer_lr * g;
    const double next = surrogate_loss(candidate, data);
    if (!(next < loss - config.adapt_tol)) break;  // no useful improvement
    theta = std::move(candidate);
    loss = next;
  }
  return theta;
}

}  // namespace

SurrogateParams adapt(const Dataset& data, const SurrogateParams& theta_ml,
                      const SurrogateParams& theta_current, bool change_detected,
                      const MetaConfig& config) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("adapt: empty dataset");
  return descend(change_detected ? theta_ml : theta_current, data, config);
}

}  // namespace mlo
