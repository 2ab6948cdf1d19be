#pragma once

#include <span>
#include <string>
#include <vector>

#include "mlo/engine.hpp"

namespace mlo {

/// Mean over environments of the gap between the global optimum and the
/// environment-final best (maximization sense, always >= 0 up to noise).
double e_bbc(const RunTrace& trace);

/// Mean over environments of peer FE count over reference FE count.
double budget_ratio(const std::vector<int>& peer_counts,
                    const std::vector<int>& best_counts);

struct LossPoint {
  long long fe = 0;  // global FE index (1-based across the run)
  int env = 0;
  double loss = 0.0;  // gap to the environment's global optimum
};

/// Per-FE optimality gap; resets at environment boundaries (sawtooth).
std::vector<LossPoint> loss_curve(const RunTrace& trace);

/// First FE index per environment at which the trace attains its own
/// environment-final best; reference counts for the budget-ratio metric.
std::vector<int> fe_to_best_counts(const RunTrace& trace);

/// Environment-final best values; targets for extended-budget peer runs.
std::vector<double> env_best_targets(const RunTrace& trace);

enum class WilcoxonVerdict { kAGreater, kBGreater, kTie };

struct WilcoxonResult {
  double p = 1.0;
  WilcoxonVerdict verdict = WilcoxonVerdict::kTie;
  double w_plus = 0.0;
  double w_minus = 0.0;
  int effective_pairs = 0;  // after dropping zero differences
  bool exact = false;       // exact null distribution vs normal approximation
};

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped, tied absolute differences get averaged ranks; the null
/// distribution is exact up to 25 effective pairs and a continuity-corrected
/// normal approximation above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                    std::span<const double> b, double level = 0.05);

/// Vargha-Delaney effect size: P(a > b) + 0.5 P(a = b) over all pairs.
double a12(std::span<const double> a, std::span<const double> b);

enum class EffectClass { kLarge, kMedium, kSmall, kEquivalent };
EffectClass a12_class(double value);
std::string to_string(EffectClass c);
std::string to_string(WilcoxonVerdict v);

/// Scott-Knott clustering of groups ordered by mean: recursive binary
/// partition maximizing the between-group sum of squares, accepted when the
/// likelihood-ratio statistic clears the chi-squared threshold. Returns one
/// rank per group, 1 = cluster with the smallest mean.
std::vector<int> scott_knott(const std::vector<std::vector<double>>& groups,
                             double alpha = 0.05);

}  // namespace mlo
