#include "mlo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mlo {

void BudgetPolicy::validate() const {
  if (init_samples < 1) throw std::invalid_argument("budget: init_samples must be >= 1");
  if (max_fe_per_env < 1)
    throw std::invalid_argument("budget: max_fe_per_env must be >= 1");
  if (extended_cap_multiplier < 1)
    throw std::invalid_argument("budget: extended_cap_multiplier must be >= 1");
  if (total_environments < 1)
    throw std::invalid_argument("budget: total_environments must be >= 1");
  if (init_samples >= max_fe_per_env * extended_cap_multiplier)
    throw std::invalid_argument("budget: init_samples exceeds the extended cap");
}

std::string to_string(AlgoFamily family) {
  switch (family) {
    case AlgoFamily::kMlbo: return "MLBO";
    case AlgoFamily::kMlddeo: return "MLDDEO";
    case AlgoFamily::kRbo: return "RBO";
    case AlgoFamily::kCbo: return "CBO";
    case AlgoFamily::kRddeo: return "RDDEO";
    case AlgoFamily::kSaeaPlain: return "SAEA";
  }
  return "?";
}

std::string to_string(SurrogateKind kind) {
  return kind == SurrogateKind::kGpr ? "GPR" : "NN";
}

std::string to_string(EaKind kind) {
  switch (kind) {
    case EaKind::kCmaEs: return "CMAES";
    case EaKind::kPso: return "PSO";
    case EaKind::kDe: return "DE";
  }
  return "?";
}

namespace {

std::string sa_name(EaKind kind) {
  switch (kind) {
    case EaKind::kCmaEs: return "SACMAES";
    case EaKind::kPso: return "SAPSO";
    case EaKind::kDe: return "SADE";
  }
  return "?";
}

}  // namespace

void AlgorithmSpec::validate() const {
  if (xi < 1) throw std::invalid_argument("algorithm: xi must be >= 1");
  acquisition.validate();
  if (meta) meta->validate();
  if (bo_family()) {
    if (surrogate != SurrogateKind::kGpr)
      throw std::invalid_argument("algorithm: BO families need the GPR surrogate");
    if (xi != 1) throw std::invalid_argument("algorithm: BO families use xi = 1");
    if (ea) throw std::invalid_argument("algorithm: BO families take no EA");
  } else {
    if (!ea) throw std::invalid_argument("algorithm: EA families need an optimizer");
    if (surrogate == SurrogateKind::kGpr && xi != 1)
      throw std::invalid_argument("algorithm: GPR-based selection uses xi = 1");
  }
}

std::string AlgorithmSpec::id() const {
  if (!label.empty()) return label;
  switch (family) {
    case AlgoFamily::kMlbo: return "MLBO";
    case AlgoFamily::kRbo: return "RBO";
    case AlgoFamily::kCbo: return "CBO";
    case AlgoFamily::kMlddeo: return "ML" + sa_name(*ea) + "-" + to_string(surrogate);
    case AlgoFamily::kRddeo: return "RDDEO-" + sa_name(*ea) + "-" + to_string(surrogate);
    case AlgoFamily::kSaeaPlain: return sa_name(*ea) + "-" + to_string(surrogate);
  }
  return "?";
}

AlgorithmSpec AlgorithmSpec::mlbo() {
  AlgorithmSpec s;
  s.family = AlgoFamily::kMlbo;
  s.meta = MetaConfig{};
  return s;
}

AlgorithmSpec AlgorithmSpec::rbo() {
  AlgorithmSpec s;
  s.family = AlgoFamily::kRbo;
  return s;
}

AlgorithmSpec AlgorithmSpec::cbo() {
  AlgorithmSpec s;
  s.family = AlgoFamily::kCbo;
  return s;
}

AlgorithmSpec AlgorithmSpec::mlddeo(EaKind ea, SurrogateKind surrogate) {
  AlgorithmSpec s;
  s.family = AlgoFamily::kMlddeo;
  s.surrogate = surrogate;
  s.ea = ea;
  s.meta = MetaConfig{};
  s.xi = surrogate == SurrogateKind::kNn ? 5 : 1;
  return s;
}

AlgorithmSpec AlgorithmSpec::rddeo(EaKind ea, SurrogateKind surrogate) {
  AlgorithmSpec s = mlddeo(ea, surrogate);
  s.family = AlgoFamily::kRddeo;
  s.meta.reset();
  return s;
}

MpbProblem::MpbProblem(MpbConfig config) : config_(std::move(config)) {
  config_.finalize();
  state_ = mpb_init(config_);
}

namespace {

/// Latin hypercube design inside the bounds.
Eigen::MatrixXd lhs_samples(int count, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, Rng& rng) {
  const int n = static_cast<int>(lower.size());
  Eigen::MatrixXd X(count, n);
  std::vector<int> strata(count);
  for (int d = 0; d < n; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    for (int i = count - 1; i > 0; --i)
      std::swap(strata[i], strata[static_cast<int>(rng.uniform_index(i + 1))]);
    const double width = (upper[d] - lower[d]) / count;
    for (int i = 0; i < count; ++i)
      X(i, d) = lower[d] + (strata[i] + rng.uniform()) * width;
  }
  return X;
}

struct RunFlags {
  bool meta = false;      // meta-learn at each change
  bool reset = false;     // re-initialize surrogate params at each change
  bool resample = false;  // fresh data (and population) at each change
  bool bo = false;        // acquisition loop instead of EA loop
};

RunFlags flags_for(const AlgorithmSpec& spec) {
  RunFlags f;
  f.bo = spec.bo_family();
  switch (spec.family) {
    case AlgoFamily::kMlbo:
    case AlgoFamily::kMlddeo:
      f.meta = f.resample = true;
      break;
    case AlgoFamily::kRbo:
    case AlgoFamily::kRddeo:
    case AlgoFamily::kSaeaPlain:
      f.reset = f.resample = true;
      break;
    case AlgoFamily::kCbo:
      break;  // ignores changes entirely
  }
  return f;
}

RunTrace run_core(MpbProblem& problem, const AlgorithmSpec& spec,
                  const BudgetPolicy& budget, std::uint64_t seed,
                  const std::vector<double>* targets, std::vector<int>* fe_counts) {
  spec.validate();
  budget.validate();
  const int n = problem.dims();
  const int T = budget.total_environments;
  if (T > problem.config().num_environments)
    throw std::invalid_argument("engine: budget spans more environments than the problem");
  if (problem.time_step() != 0 || problem.fe_count() != 0)
    throw std::invalid_argument("engine: problem already consumed");
  if (targets && static_cast<int>(targets->size()) != T)
    throw std::invalid_argument("engine: one target per environment required");

  const RunFlags flags = flags_for(spec);
  const int cap = budget.max_fe_per_env;
  const int ext_cap = targets ? budget.extended_cap() : cap;
  const MetaConfig mc = spec.meta.value_or(MetaConfig{});
  const int acq_budget = 512 * n + 2000;

  Rng rng(derive_seed(seed, "run"));

  SurrogateParams theta0 = spec.surrogate == SurrogateKind::kGpr
                               ? SurrogateParams::gpr_defaults()
                               : SurrogateParams::nn_init(n, rng);
  SurrogateParams theta_ml = theta0;
  SurrogateParams theta_t = theta0;

  RunTrace trace;
  trace.algo_id = spec.id();
  trace.seed = seed;
  trace.dims = n;

  TaskArchive archive;
  Dataset data;
  data.set_normalization(Normalization::input_only(problem.lower(), problem.upper()));

  int env = 0;
  int fe_in_env = 0;
  int crossing = -1;
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = Eigen::VectorXd::Zero(n);
  std::optional<MetaTrace> env_meta;
  bool change_flag = false;

  auto env_done = [&] {
    if (targets)
      return (fe_in_env >= cap && crossing >= 0) || fe_in_env >= ext_cap;
    return fe_in_env >= cap;
  };

  auto evaluate = [&](const Eigen::VectorXd& x) {
    const double y = problem.eval(x);
    ++fe_in_env;
    if (y > best) {
      best = y;
      best_x = x;
    }
    if (targets && crossing < 0 && best >= (*targets)[env]) crossing = fe_in_env;
    trace.fes.push_back({env, fe_in_env, x, y, best});
    data.add(x, env, y);
    data.refresh_target_scaling();
  };

  auto sample_initial_design = [&] {
    const Eigen::MatrixXd X =
        lhs_samples(budget.init_samples, problem.lower(), problem.upper(), rng);
    for (int i = 0; i < X.rows(); ++i) {
      if (env_done()) {
        trace.truncated = true;
        return;
      }
      evaluate(X.row(i).transpose());
    }
  };

  Population pop;
  auto init_pop = [&] {
    pop = init_population(*spec.ea, spec.ea_params, problem.lower(), problem.upper(), rng);
  };

  if (!flags.bo) init_pop();
  sample_initial_design();

  while (true) {
    if (env_done()) {
      EnvRecord rec;
      rec.env = env;
      rec.best_x = best_x;
      rec.best_y = best;
      rec.global_optimum = problem.global_optimum().second;
      rec.fe_count = fe_in_env;
      rec.train_size = static_cast<int>(data.size());
      rec.final_params = theta_t;
      rec.meta_trace = std::move(env_meta);
      trace.envs.push_back(std::move(rec));
      if (fe_counts) fe_counts->push_back(crossing >= 0 ? crossing : ext_cap);

      if (env == T - 1) break;

      if (flags.resample) archive.append(data);
      problem.advance();
      ++env;
      fe_in_env = 0;
      crossing = -1;
      best = -std::numeric_limits<double>::infinity();
      env_meta.reset();

      if (flags.meta) {
        Rng meta_rng(derive_seed(seed, "meta", static_cast<std::uint64_t>(env)));
        auto [learned, meta_trace] = meta_learn(archive, mc, theta0, meta_rng);
        theta_ml = std::move(learned);
        env_meta = std::move(meta_trace);
      } else if (flags.reset) {
        theta_ml = theta0;
      }

      if (flags.resample) {
        data = Dataset();
        data.set_normalization(
            Normalization::input_only(problem.lower(), problem.upper()));
        if (!flags.bo) init_pop();
        sample_initial_design();
      }
      change_flag = flags.resample || flags.reset;
      continue;
    }

    theta_t = adapt(data, theta_ml, theta_t, change_flag, mc);
    change_flag = false;
    const FittedSurrogate fit(theta_t, data);

    if (flags.bo) {
      const Eigen::VectorXd x = maximize_acquisition(
          fit, spec.acquisition, problem.lower(), problem.upper(), acq_budget, rng);
      evaluate(x);
    } else {
      for (int i = 0; i < pop.size(); ++i)
        pop.fitness[i] = fit.predict(pop.individuals.row(i).transpose()).mean;
      const Population offspring = ea_step(
          pop, *spec.ea, spec.ea_params,
          [&fit](const Eigen::VectorXd& x) { return fit.predict(x).mean; },
          problem.lower(), problem.upper(), rng);
      const auto candidates =
          identify_promising(pop, offspring, fit, spec.acquisition, spec.xi);
      const int effective_cap = crossing >= 0 ? cap : ext_cap;
      const int remaining = effective_cap - fe_in_env;
      const int to_eval = std::min<int>(static_cast<int>(candidates.size()), remaining);
      for (int i = 0; i < to_eval; ++i) evaluate(candidates[i]);
      pop = environmental_selection(pop, offspring, *spec.ea, spec.ea_params);
    }
  }
  return trace;
}

}  // namespace

RunTrace run_mlbo(MpbProblem& problem, const AlgorithmSpec& spec,
                  const BudgetPolicy& budget, std::uint64_t seed) {
  if (spec.family != AlgoFamily::kMlbo)
    throw std::invalid_argument("run_mlbo: wrong family");
  return run_core(problem, spec, budget, seed, nullptr, nullptr);
}

RunTrace run_mlddeo(MpbProblem& problem, const AlgorithmSpec& spec,
                    const BudgetPolicy& budget, std::uint64_t seed) {
  if (spec.family != AlgoFamily::kMlddeo)
    throw std::invalid_argument("run_mlddeo: wrong family");
  return run_core(problem, spec, budget, seed, nullptr, nullptr);
}

RunTrace run_baseline(MpbProblem& problem, const AlgorithmSpec& spec,
                      const BudgetPolicy& budget, std::uint64_t seed) {
  if (spec.family == AlgoFamily::kMlbo || spec.family == AlgoFamily::kMlddeo)
    throw std::invalid_argument("run_baseline: expected a baseline family");
  return run_core(problem, spec, budget, seed, nullptr, nullptr);
}

RunTrace run_algorithm(MpbProblem& problem, const AlgorithmSpec& spec,
                       const BudgetPolicy& budget, std::uint64_t seed) {
  return run_core(problem, spec, budget, seed, nullptr, nullptr);
}

std::vector<int> run_extended_budget(MpbProblem& problem, const AlgorithmSpec& spec,
                                     const BudgetPolicy& budget,
                                     const std::vector<double>& target_values,
                                     std::uint64_t seed) {
  std::vector<int> counts;
  counts.reserve(budget.total_environments);
  run_core(problem, spec, budget, seed, &target_values, &counts);
  return counts;
}

}  // namespace mlo
