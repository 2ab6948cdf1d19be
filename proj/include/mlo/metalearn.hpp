#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mlo/surrogate.hpp"

namespace mlo {

/// Settings for the meta-learning loop and the warm-started adaptation.
struct MetaConfig {
  int few_shot_k = 5;         // K: support/query sample count per task
  int tasks_per_batch = 5;    // m: effectively min(m, #environments)
  double inner_lr = 0.01;     // alpha
  double outer_lr = 0.01;     // beta
  int max_epochs = 200;       // one sampled batch per epoch
  double convergence_tol = 1e-4;  // relative, on both loss and parameters
  bool first_order = true;    // FOMAML outer gradient; exact mode is GPR-only

  // Adaptation (same optimizer family, run to its own convergence).
  int adapt_max_iters = 100;
  double adapt_tol = 1e-6;  // absolute loss improvement
  bool use_adam = false;    // optional Adam variant, mainly for the NN

  void validate() const;
};

/// Datasets of previously completed environments, in time order.
struct TaskArchive {
  std::vector<Dataset> environments;

  void append(Dataset d) {
    if (d.empty()) throw std::invalid_argument("archive: empty environment dataset");
    environments.push_back(std::move(d));
  }
  std::size_t size() const { return environments.size(); }
  bool empty() const { return environments.empty(); }
};

/// Per-batch diagnostics: running-average meta-loss (AL_B) and a parameter
/// snapshot (MP_B).
struct MetaBatchRecord {
  int batch = 0;
  double avg_loss = 0.0;
  Eigen::VectorXd params;
};

struct MetaTrace {
  std::vector<MetaBatchRecord> records;
};

struct TaskSplit {
  Dataset support;
  Dataset query;
};

/// Draws a K/K support/query split from one environment's dataset: disjoint
/// without replacement when the dataset has >= 2K points, with replacement
/// otherwise.
TaskSplit sample_split(const Dataset& data, int k, Rng& rng);

/// One inner-loop update: theta - alpha * grad L(theta, support).
/// Exactly one gradient evaluation.
SurrogateParams inner_step(const SurrogateParams& theta, const Dataset& support,
                           double alpha);

/// Sum over tasks of the query loss after one inner step each.
double meta_loss(const SurrogateParams& theta, std::span<const TaskSplit> tasks,
                 double alpha);

/// Gradient-based meta-learning over the archive: samples task batches,
/// takes inner steps, updates theta by the outer rule until the epoch
/// budget or convergence of both loss and parameters. Returns the learned
/// initialization and the per-batch trace.
std::pair<SurrogateParams, MetaTrace> meta_learn(const TaskArchive& archive,
                                                 const MetaConfig& config,
                                                 const SurrogateParams& theta_init,
                                                 Rng& rng);

/// Warm-started fit on the new environment's data: starts from theta_ml
/// when a change was detected (theta_current otherwise) and runs the
/// meta-optimizer family on the full loss until convergence.
SurrogateParams adapt(const Dataset& data, const SurrogateParams& theta_ml,
                      const SurrogateParams& theta_current, bool change_detected,
                      const MetaConfig& config);

}  // namespace mlo
