#pragma once

#include <Eigen/Dense>
#include <functional>
#include <variant>
#include <vector>

#include "mlo/rng.hpp"
#include "mlo/surrogate.hpp"

namespace mlo {

enum class EaKind { kCmaEs, kPso, kDe };

struct EaParams {
  int pop_size = 20;
  double cma_sigma0_frac = 0.3;  // initial step-size as a fraction of the range
  double pso_inertia = 0.729;
  double pso_c1 = 1.49445;
  double pso_c2 = 1.49445;
  double de_weight = 0.5;     // F
  double de_crossover = 0.9;  // CR
};

/// CMA-ES strategy state (rank-mu update with cumulation paths).
struct CmaEsState {
  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd cov;
  Eigen::VectorXd path_cov;
  Eigen::VectorXd path_sigma;
  int generation = 0;
};

struct PsoState {
  Eigen::MatrixXd velocities;  // N x n
  Eigen::MatrixXd pbest_x;
  Eigen::VectorXd pbest_f;
  Eigen::VectorXd gbest_x;
  double gbest_f = 0.0;
  bool bests_valid = false;
};

/// Search population. Fitness is maximization-sense and tagged by source.
struct Population {
  enum class FitnessTag { kSurrogate, kTrue };

  Eigen::MatrixXd individuals;  // N x n, one row per individual
  Eigen::VectorXd fitness;
  FitnessTag tag = FitnessTag::kSurrogate;
  std::variant<std::monostate, CmaEsState, PsoState> strategy;

  int size() const { return static_cast<int>(individuals.rows()); }
  int dim() const { return static_cast<int>(individuals.cols()); }
};

struct AcquisitionConfig {
  double ucb_w = 2.0;

  void validate() const {
    if (ucb_w < 0.0) throw std::invalid_argument("acquisition: w must be >= 0");
  }
};

/// Upper confidence bound, maximization sense.
inline double ucb(const Prediction& pred, double w) {
  return pred.mean + w * std::sqrt(std::max(0.0, pred.variance));
}

using FitnessFn = std::function<double(const Eigen::VectorXd&)>;

/// Uniform-random population inside the bounds with initialized strategy
/// state. Fitness entries must be filled by the caller.
Population init_population(EaKind kind, const EaParams& params,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           Rng& rng);

/// One generation of offspring: CMA-ES samples its adapted Gaussian, PSO
/// moves particles, DE applies rand/1/bin. Offspring are clamped to the
/// bounds and scored with the supplied (surrogate) fitness callback.
Population ea_step(const Population& parents, EaKind kind, const EaParams& params,
                   const FitnessFn& fitness, const Eigen::VectorXd& lower,
                   const Eigen::VectorXd& upper, Rng& rng);

/// Survivor selection and strategy-state adaptation: CMA-ES keeps offspring
/// and adapts mean/step/covariance, PSO advances positions and updates
/// bests, DE does one-to-one replacement.
Population environmental_selection(const Population& parents, const Population& offspring,
                                   EaKind kind, const EaParams& params);

/// Points worth a true evaluation, drawn from parents + offspring: UCB
/// argmax for GPR (xi must be 1), top-xi predicted mean for NN with
/// coordinate-duplicate collapsing.
std::vector<Eigen::VectorXd> identify_promising(const Population& parents,
                                                const Population& offspring,
                                                const FittedSurrogate& surrogate,
                                                const AcquisitionConfig& acq, int xi);

/// Multi-start maximizer of the UCB surface: random probes followed by
/// pattern-search refinement of the best probes, all on the surrogate.
Eigen::VectorXd maximize_acquisition(const FittedSurrogate& surrogate,
                                     const AcquisitionConfig& acq,
                                     const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper, int budget, Rng& rng);

}  // namespace mlo
