#include "mlo/optim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace mlo {

namespace {

Eigen::VectorXd clamp_to(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

/// Derived CMA-ES constants for dimension n and population size lambda.
struct CmaWeights {
  int mu;
  Eigen::VectorXd w;
  double mu_eff;
  double c_sigma, d_sigma, c_cov_path, c_rank1, c_rankmu;
  double chi_n;

  CmaWeights(int n, int lambda) {
    mu = lambda / 2;
    w.resize(mu);
    for (int i = 0; i < mu; ++i) w[i] = std::log(mu + 0.5) - std::log(i + 1.0);
    w /= w.sum();
    mu_eff = 1.0 / w.squaredNorm();
    const double dn = n;
    c_sigma = (mu_eff + 2.0) / (dn + mu_eff + 5.0);
    d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (dn + 1.0)) - 1.0) +
              c_sigma;
    c_cov_path = (4.0 + mu_eff / dn) / (dn + 4.0 + 2.0 * mu_eff / dn);
    c_rank1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mu_eff);
    c_rankmu = std::min(1.0 - c_rank1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) /
                                           ((dn + 2.0) * (dn + 2.0) + mu_eff));
    chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));
  }
};

std::vector<int> rank_descending(const Eigen::VectorXd& fitness) {
  std::vector<int> idx(fitness.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return fitness[a] > fitness[b]; });
  return idx;
}

}  // namespace

Population init_population(EaKind kind, const EaParams& params,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           Rng& rng) {
  if (params.pop_size < 4) throw std::invalid_argument("population: need >= 4 individuals");
  const int n = static_cast<int>(lower.size());
  Population pop;
  pop.individuals.resize(params.pop_size, n);
  for (int i = 0; i < params.pop_size; ++i)
    for (int d = 0; d < n; ++d) pop.individuals(i, d) = rng.uniform(lower[d], upper[d]);
  pop.fitness = Eigen::VectorXd::Constant(params.pop_size,
                                          -std::numeric_limits<double>::infinity());
  pop.tag = Population::FitnessTag::kSurrogate;

  switch (kind) {
    case EaKind::kCmaEs: {
      CmaEsState st;
      st.mean = pop.individuals.colwise().mean().transpose();
      st.sigma = params.cma_sigma0_frac * (upper - lower).mean();
      st.cov = Eigen::MatrixXd::Identity(n, n);
      st.path_cov = Eigen::VectorXd::Zero(n);
      st.path_sigma = Eigen::VectorXd::Zero(n);
      pop.strategy = std::move(st);
      break;
    }
    case EaKind::kPso: {
      PsoState st;
      st.velocities = Eigen::MatrixXd::Zero(params.pop_size, n);
      pop.strategy = std::move(st);
      break;
    }
    case EaKind::kDe:
      pop.strategy = std::monostate{};
      break;
  }
  return pop;
}

Population ea_step(const Population& parents, EaKind kind, const EaParams& params,
                   const FitnessFn& fitness, const Eigen::VectorXd& lower,
                   const Eigen::VectorXd& upper, Rng& rng) {
  const int N = parents.size();
  const int n = parents.dim();
  Population offspring = parents;  // carries strategy state forward

  switch (kind) {
    case EaKind::kCmaEs: {
      const auto& st = std::get<CmaEsState>(parents.strategy);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.cov);
      const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
      const Eigen::MatrixXd& B = eig.eigenvectors();
      for (int i = 0; i < N; ++i) {
        Eigen::VectorXd z(n);
        for (int k = 0; k < n; ++k) z[k] = rng.normal();
        const Eigen::VectorXd x = st.mean + st.sigma * (B * d.cwiseProduct(z));
        offspring.individuals.row(i) = clamp_to(x, lower, upper).transpose();
      }
      break;
    }
    case EaKind::kPso: {
      auto st = std::get<PsoState>(parents.strategy);
      if (!st.bests_valid) {
        st.pbest_x = parents.individuals;
        st.pbest_f = parents.fitness;
        int g;
        parents.fitness.maxCoeff(&g);
        st.gbest_x = parents.individuals.row(g).transpose();
        st.gbest_f = parents.fitness[g];
        st.bests_valid = true;
      }
      for (int i = 0; i < N; ++i) {
        for (int d = 0; d < n; ++d) {
          const double r1 = rng.uniform();
          const double r2 = rng.uniform();
          st.velocities(i, d) =
              params.pso_inertia * st.velocities(i, d) +
              params.pso_c1 * r1 * (st.pbest_x(i, d) - parents.individuals(i, d)) +
              params.pso_c2 * r2 * (st.gbest_x[d] - parents.individuals(i, d));
        }
        const Eigen::VectorXd moved =
            parents.individuals.row(i).transpose() + st.velocities.row(i).transpose();
        offspring.individuals.row(i) = clamp_to(moved, lower, upper).transpose();
      }
      offspring.strategy = std::move(st);
      break;
    }
    case EaKind::kDe: {
      for (int i = 0; i < N; ++i) {
        int r1, r2, r3;
        do r1 = static_cast<int>(rng.uniform_index(N)); while (r1 == i);
        do r2 = static_cast<int>(rng.uniform_index(N)); while (r2 == i || r2 == r1);
        do r3 = static_cast<int>(rng.uniform_index(N)); while (r3 == i || r3 == r1 || r3 == r2);
        const Eigen::VectorXd mutant =
            parents.individuals.row(r1).transpose() +
            params.de_weight * (parents.individuals.row(r2).transpose() -
                                parents.individuals.row(r3).transpose());
        Eigen::VectorXd trial = parents.individuals.row(i).transpose();
        // Forced crossover coordinate applies only when CR > 0, so the
        // degenerate F=0, CR=0 setting reproduces the parents exactly.
        const int jrand = params.de_crossover > 0.0
                              ? static_cast<int>(rng.uniform_index(n)) : -1;
        for (int d = 0; d < n; ++d)
          if (rng.uniform() < params.de_crossover || d == jrand) trial[d] = mutant[d];
        offspring.individuals.row(i) = clamp_to(trial, lower, upper).transpose();
      }
      break;
    }
  }

  for (int i = 0; i < N; ++i)
    offspring.fitness[i] = fitness(offspring.individuals.row(i).transpose());
  offspring.tag = Population::FitnessTag::kSurrogate;
  return offspring;
}

Population environmental_selection(const Population& parents, const Population& offspring,
                                   EaKind kind, const EaParams& params) {
  (void)params;
  if (parents.size() != offspring.size())
    throw std::invalid_argument("selection: population size mismatch");
  const int N = parents.size();
  const int n = parents.dim();

  switch (kind) {
    case EaKind::kCmaEs: {
      Population next = offspring;
      auto st = std::get<CmaEsState>(offspring.strategy);
      const CmaWeights cw(n, N);

      const auto order = rank_descending(offspring.fitness);
      Eigen::MatrixXd y_sel(cw.mu, n);
      for (int i = 0; i < cw.mu; ++i)
        y_sel.row(i) =
            (offspring.individuals.row(order[i]).transpose() - st.mean).transpose() /
            st.sigma;

      const Eigen::VectorXd y_w = y_sel.transpose() * cw.w;
      const Eigen::VectorXd mean_new = st.mean + st.sigma * y_w;

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.cov);
      const Eigen::VectorXd d_inv =
          eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt().cwiseInverse();
      const Eigen::MatrixXd cov_inv_sqrt =
          eig.eigenvectors() * d_inv.asDiagonal() * eig.eigenvectors().transpose();

      st.path_sigma = (1.0 - cw.c_sigma) * st.path_sigma +
                      std::sqrt(cw.c_sigma * (2.0 - cw.c_sigma) * cw.mu_eff) *
                          (cov_inv_sqrt * y_w);
      const double denom =
          std::sqrt(1.0 - std::pow(1.0 - cw.c_sigma, 2.0 * (st.generation + 1)));
      const bool h_sigma =
          st.path_sigma.norm() / denom < (1.4 + 2.0 / (n + 1.0)) * cw.chi_n;

      st.path_cov = (1.0 - cw.c_cov_path) * st.path_cov +
                    (h_sigma ? std::sqrt(cw.c_cov_path * (2.0 - cw.c_cov_path) *
                                         cw.mu_eff)
                             : 0.0) *
                        y_w;

      Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < cw.mu; ++i)
        rank_mu += cw.w[i] * y_sel.row(i).transpose() * y_sel.row(i);

      st.cov = (1.0 - cw.c_rank1 - cw.c_rankmu) * st.cov +
               cw.c_rank1 * (st.path_cov * st.path_cov.transpose() +
                             (h_sigma ? 0.0
                                      : cw.c_cov_path * (2.0 - cw.c_cov_path)) *
                                 st.cov) +
               cw.c_rankmu * rank_mu;
      st.cov = 0.5 * (st.cov + st.cov.transpose());

      st.sigma *= std::exp((cw.c_sigma / cw.d_sigma) *
                           (st.path_sigma.norm() / cw.chi_n - 1.0));
      st.mean = mean_new;
      ++st.generation;

      next.strategy = std::move(st);
      return next;
    }
    case EaKind::kPso: {
      Population next = offspring;
      auto st = std::get<PsoState>(offspring.strategy);
      for (int i = 0; i < N; ++i) {
        if (offspring.fitness[i] > st.pbest_f[i]) {
          st.pbest_f[i] = offspring.fitness[i];
          st.pbest_x.row(i) = offspring.individuals.row(i);
        }
        if (offspring.fitness[i] > st.gbest_f) {
          st.gbest_f = offspring.fitness[i];
          st.gbest_x = offspring.individuals.row(i).transpose();
        }
      }
      next.strategy = std::move(st);
      return next;
    }
    case EaKind::kDe: {
      Population next = parents;
      for (int i = 0; i < N; ++i) {
        if (offspring.fitness[i] >= parents.fitness[i]) {
          next.individuals.row(i) = offspring.individuals.row(i);
          next.fitness[i] = offspring.fitness[i];
        }
      }
      return next;
    }
  }
  throw std::logic_error("selection: unknown algorithm");
}

std::vector<Eigen::VectorXd> identify_promising(const Population& parents,
                                                const Population& offspring,
                                                const FittedSurrogate& surrogate,
                                                const AcquisitionConfig& acq, int xi) {
  acq.validate();
  if (xi < 1) throw std::invalid_argument("identify_promising: xi must be >= 1");
  const int total = parents.size() + offspring.size();
  if (xi > total)
    throw std::invalid_argument("identify_promising: xi exceeds candidate pool");

  Eigen::MatrixXd pool(total, parents.dim());
  pool.topRows(parents.size()) = parents.individuals;
  pool.bottomRows(offspring.size()) = offspring.individuals;

  const bool is_gpr = surrogate.params().kind == SurrogateKind::kGpr;
  if (is_gpr && xi != 1)
    throw std::invalid_argument("identify_promising: GPR variant uses xi = 1");

  std::vector<double> score(total);
  for (int i = 0; i < total; ++i) {
    const Prediction p = surrogate.predict(pool.row(i).transpose());
    score[i] = is_gpr ? ucb(p, acq.ucb_w) : p.mean;
  }

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] > score[b]; });

  std::vector<Eigen::VectorXd> picked;
  for (int idx : order) {
    if (static_cast<int>(picked.size()) == xi) break;
    Eigen::VectorXd cand = pool.row(idx).transpose();
    bool duplicate = false;
    for (const auto& p : picked)
      if ((p - cand).cwiseAbs().maxCoeff() == 0.0) {
        duplicate = true;
        break;
      }
    if (!duplicate) picked.push_back(std::move(cand));
  }
  return picked;
}

Eigen::VectorXd maximize_acquisition(const FittedSurrogate& surrogate,
                                     const AcquisitionConfig& acq,
                                     const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper, int budget, Rng& rng) {
  acq.validate();
  if (budget < 1) throw std::invalid_argument("maximize_acquisition: budget must be >= 1");
  const int n = static_cast<int>(lower.size());
  int evals_left = budget;

  auto value = [&](const Eigen::VectorXd& x) {
    --evals_left;
    return ucb(surrogate.predict(x), acq.ucb_w);
  };

  const int num_probes = std::min(512 * n, evals_left);
  Eigen::MatrixXd probes(num_probes, n);
  Eigen::VectorXd probe_val(num_probes);
  for (int i = 0; i < num_probes; ++i) {
    for (int d = 0; d < n; ++d) probes(i, d) = rng.uniform(lower[d], upper[d]);
    probe_val[i] = value(probes.row(i).transpose());
  }

  std::vector<int> order(num_probes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probe_val[a] > probe_val[b]; });

  Eigen::VectorXd best_x = probes.row(order.front()).transpose();
  double best_v = probe_val[order.front()];

  const int num_starts = std::min<int>(8, num_probes);
  if (evals_left <= 0 || num_starts == 0) return best_x;
  const int per_start = std::max(1, evals_left / num_starts);
  const Eigen::VectorXd range = upper - lower;

  for (int s = 0; s < num_starts && evals_left > 0; ++s) {
    Eigen::VectorXd x = probes.row(order[s]).transpose();
    double fx = probe_val[order[s]];
    Eigen::VectorXd step = 0.1 * range;
    int local_budget = std::min(per_start, evals_left);

    while (local_budget > 0 && step.maxCoeff() > 1e-9 * range.maxCoeff()) {
      bool improved = false;
      for (int d = 0; d < n && local_budget > 0; ++d) {
        for (double sgn : {1.0, -1.0}) {
          if (local_budget <= 0) break;
          Eigen::VectorXd cand = x;
          cand[d] = std::clamp(cand[d] + sgn * step[d], lower[d], upper[d]);
          if (cand[d] == x[d]) continue;
          const double fv = value(cand);
          --local_budget;
          if (fv > fx) {
            x = cand;
            fx = fv;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (fx > best_v) {
      best_v = fx;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace mlo
