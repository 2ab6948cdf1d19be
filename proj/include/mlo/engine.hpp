#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlo/metalearn.hpp"
#include "mlo/mpb.hpp"
#include "mlo/optim.hpp"

namespace mlo {

/// Per-environment evaluation budget. The initial design is charged against
/// the environment's cap, so cap = 5n leaves n evaluations for the
/// optimizer when init = 4n.
struct BudgetPolicy {
  int init_samples = 0;             // 4n when built via for_dims
  int max_fe_per_env = 0;           // 5n
  int extended_cap_multiplier = 7;  // budget-ratio mode cap factor
  int total_environments = 10;

  static BudgetPolicy for_dims(int dims, int total_environments) {
    BudgetPolicy b;
    b.init_samples = 4 * dims;
    b.max_fe_per_env = 5 * dims;
    b.total_environments = total_environments;
    return b;
  }
  int extended_cap() const { return extended_cap_multiplier * max_fe_per_env; }
  void validate() const;
};

enum class AlgoFamily { kMlbo, kMlddeo, kRbo, kCbo, kRddeo, kSaeaPlain };

std::string to_string(AlgoFamily family);
std::string to_string(SurrogateKind kind);
std::string to_string(EaKind kind);

/// A runnable algorithm instance: family plus surrogate/EA/meta choices.
struct AlgorithmSpec {
  AlgoFamily family = AlgoFamily::kMlbo;
  SurrogateKind surrogate = SurrogateKind::kGpr;
  std::optional<EaKind> ea;
  std::optional<MetaConfig> meta;  // meaningful for the ML families
  int xi = 1;
  EaParams ea_params;
  AcquisitionConfig acquisition;
  std::string label;  // optional id override (sweep variants)

  void validate() const;
  bool meta_enabled() const {
    return family == AlgoFamily::kMlbo || family == AlgoFamily::kMlddeo;
  }
  bool bo_family() const {
    return family == AlgoFamily::kMlbo || family == AlgoFamily::kRbo ||
           family == AlgoFamily::kCbo;
  }
  /// Stable identifier used in file names and result tables.
  std::string id() const;

  static AlgorithmSpec mlbo();
  static AlgorithmSpec rbo();
  static AlgorithmSpec cbo();
  static AlgorithmSpec mlddeo(EaKind ea, SurrogateKind surrogate);
  static AlgorithmSpec rddeo(EaKind ea, SurrogateKind surrogate);
};

struct FeRecord {
  int env = 0;
  int fe_in_env = 0;  // 1-based within the environment
  Eigen::VectorXd x;
  double y_true = 0.0;
  double best_so_far = 0.0;  // within the environment
};

struct EnvRecord {
  int env = 0;
  Eigen::VectorXd best_x;
  double best_y = 0.0;
  double global_optimum = 0.0;
  int fe_count = 0;
  int train_size = 0;  // surrogate training-set size at the env boundary
  SurrogateParams final_params;
  std::optional<MetaTrace> meta_trace;  // present when meta-learning ran
};

struct RunTrace {
  std::string algo_id;
  std::uint64_t seed = 0;
  int dims = 0;
  bool truncated = false;
  std::vector<FeRecord> fes;
  std::vector<EnvRecord> envs;

  long long total_fes() const { return static_cast<long long>(fes.size()); }
};

/// Counting wrapper around the benchmark: owns the landscape schedule and
/// the true-FE counter. Optimizers never see the state directly.
class MpbProblem {
 public:
  explicit MpbProblem(MpbConfig config);

  int dims() const { return config_.dims; }
  const Eigen::VectorXd& lower() const { return config_.lower; }
  const Eigen::VectorXd& upper() const { return config_.upper; }
  const MpbConfig& config() const { return config_; }
  int time_step() const { return state_.time_step; }
  long long fe_count() const { return fe_count_; }

  double eval(const Eigen::VectorXd& x) {
    ++fe_count_;
    return mpb_eval(state_, x);
  }
  void advance() { state_ = mpb_advance(state_, config_); }
  /// Analysis-side helper; not charged to the FE budget.
  std::pair<Eigen::VectorXd, double> global_optimum() const {
    return mpb_global_optimum(state_);
  }
  const MpbState& state() const { return state_; }

 private:
  MpbConfig config_;
  MpbState state_;
  long long fe_count_ = 0;
};

/// Bayesian-optimization loop (MLBO and its RBO/CBO ablations).
RunTrace run_mlbo(MpbProblem& problem, const AlgorithmSpec& spec,
                  const BudgetPolicy& budget, std::uint64_t seed);

/// Surrogate-assisted evolutionary loop (MLDDEO and RDDEO/plain SAEAs).
RunTrace run_mlddeo(MpbProblem& problem, const AlgorithmSpec& spec,
                    const BudgetPolicy& budget, std::uint64_t seed);

/// RBO / CBO / RDDEO / plain SAEA, dispatched on the family.
RunTrace run_baseline(MpbProblem& problem, const AlgorithmSpec& spec,
                      const BudgetPolicy& budget, std::uint64_t seed);

/// Family dispatcher.
RunTrace run_algorithm(MpbProblem& problem, const AlgorithmSpec& spec,
                       const BudgetPolicy& budget, std::uint64_t seed);

/// Budget-ratio mode: per environment, the first FE index at which the
/// best-so-far reaches the supplied target. Environments keep the normal
/// schedule when the target falls inside it and extend up to
/// extended_cap_multiplier * cap otherwise; never-reached targets record
/// the extended cap itself.
std::vector<int> run_extended_budget(MpbProblem& problem, const AlgorithmSpec& spec,
                                     const BudgetPolicy& budget,
                                     const std::vector<double>& target_values,
                                     std::uint64_t seed);

}  // namespace mlo
