#include "mlo/analysis.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace mlo {

double e_bbc(const RunTrace& trace) {
  if (trace.envs.empty()) throw std::invalid_argument("e_bbc: trace has no environments");
  double sum = 0.0;
  for (const auto& env : trace.envs) sum += env.global_optimum - env.best_y;
  return sum / static_cast<double>(trace.envs.size());
}

double budget_ratio(const std::vector<int>& peer_counts,
                    const std::vector<int>& best_counts) {
  if (peer_counts.size() != best_counts.size() || peer_counts.empty())
    throw std::invalid_argument("budget_ratio: mismatched environment counts");
  double sum = 0.0;
  for (std::size_t t = 0; t < peer_counts.size(); ++t) {
    if (peer_counts[t] < 1 || best_counts[t] < 1)
      throw std::invalid_argument("budget_ratio: counts must be >= 1");
    sum += static_cast<double>(peer_counts[t]) / best_counts[t];
  }
  return sum / static_cast<double>(peer_counts.size());
}

std::vector<LossPoint> loss_curve(const RunTrace& trace) {
  std::vector<double> optima(trace.envs.size());
  for (const auto& env : trace.envs) optima[env.env] = env.global_optimum;

  std::vector<LossPoint> curve;
  curve.reserve(trace.fes.size());
  long long global_fe = 0;
  for (const auto& fe : trace.fes) {
    ++global_fe;
    if (fe.env >= static_cast<int>(optima.size()))
      throw std::invalid_argument("loss_curve: incomplete trace");
    curve.push_back({global_fe, fe.env, optima[fe.env] - fe.best_so_far});
  }
  return curve;
}

std::vector<int> fe_to_best_counts(const RunTrace& trace) {
  std::vector<int> counts(trace.envs.size(), 0);
  for (const auto& env : trace.envs) {
    int first = 0;
    for (const auto& fe : trace.fes) {
      if (fe.env != env.env) continue;
      if (fe.best_so_far >= env.best_y) {
        first = fe.fe_in_env;
        break;
      }
    }
    counts[env.env] = first > 0 ? first : env.fe_count;
  }
  return counts;
}

std::vector<double> env_best_targets(const RunTrace& trace) {
  std::vector<double> targets(trace.envs.size());
  for (const auto& env : trace.envs) targets[env.env] = env.best_y;
  return targets;
}

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Midranks of |d| values.
std::vector<double> midranks(const std::vector<double>& abs_d) {
  const std::size_t m = abs_d.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return abs_d[i] < abs_d[j]; });
  std::vector<double> rank(m);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

/// Exact null CDF table of W+ via subset-sum convolution over the (doubled,
/// hence integral) ranks.
double exact_two_sided_p(const std::vector<double>& ranks, double w_plus) {
  std::vector<long> r2(ranks.size());
  long total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    r2[i] = std::lround(2.0 * ranks[i]);
    total += r2[i];
  }
  std::vector<double> count(total + 1, 0.0);
  count[0] = 1.0;
  for (long r : r2)
    for (long s = total; s >= r; --s) count[s] += count[s - r];

  const double denom = std::pow(2.0, static_cast<double>(ranks.size()));
  const long w2 = std::lround(2.0 * w_plus);
  double le = 0.0, ge = 0.0;
  for (long s = 0; s <= total; ++s) {
    if (s <= w2) le += count[s];
    if (s >= w2) ge += count[s];
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / denom);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                    std::span<const double> b, double level) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: unequal lengths");
  if (a.size() < 5) throw std::invalid_argument("wilcoxon: need at least 5 pairs");

  std::vector<double> diff;
  diff.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diff.push_back(d);  // classic zero handling: drop
  }

  WilcoxonResult res;
  res.effective_pairs = static_cast<int>(diff.size());
  if (diff.empty()) {
    res.p = 1.0;
    res.verdict = WilcoxonVerdict::kTie;
    return res;
  }

  std::vector<double> abs_d(diff.size());
  for (std::size_t i = 0; i < diff.size(); ++i) abs_d[i] = std::abs(diff[i]);
  const std::vector<double> rank = midranks(abs_d);

  for (std::size_t i = 0; i < diff.size(); ++i)
    (diff[i] > 0.0 ? res.w_plus : res.w_minus) += rank[i];

  const std::size_t m = diff.size();
  if (m <= 25) {
    res.exact = true;
    res.p = exact_two_sided_p(rank, res.w_plus);
  } else {
    const double mu = static_cast<double>(m) * (m + 1) / 4.0;
    double var = static_cast<double>(m) * (m + 1) * (2.0 * m + 1.0) / 24.0;
    // tie correction: sum(t^3 - t)/48 over tied groups
    std::vector<double> sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      var -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
    if (var <= 0.0) {
      res.p = 1.0;
      res.verdict = WilcoxonVerdict::kTie;
      return res;
    }
    const double dev = res.w_plus - mu;
    const double cc = dev > 0 ? -0.5 : (dev < 0 ? 0.5 : 0.0);
    const double z = (dev + cc) / std::sqrt(var);
    res.p = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
  }

  if (res.p < level)
    res.verdict = res.w_plus > res.w_minus ? WilcoxonVerdict::kAGreater
                                           : WilcoxonVerdict::kBGreater;
  else
    res.verdict = WilcoxonVerdict::kTie;
  return res;
}

double a12(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("a12: empty sample");
  // Midrank formulation: A = (R1/m - (m+1)/2) / n with R1 the rank sum of a
  // in the combined sample.
  std::vector<double> combined(a.begin(), a.end());
  combined.insert(combined.end(), b.begin(), b.end());
  const std::vector<double> rank = midranks(combined);
  double r1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r1 += rank[i];
  const double m = static_cast<double>(a.size());
  const double n = static_cast<double>(b.size());
  return (r1 / m - (m + 1.0) / 2.0) / n;
}

EffectClass a12_class(double value) {
  const double d = std::abs(value - 0.5);
  if (d >= 0.21) return EffectClass::kLarge;
  if (d >= 0.14) return EffectClass::kMedium;
  if (d >= 0.06) return EffectClass::kSmall;
  return EffectClass::kEquivalent;
}

std::string to_string(EffectClass c) {
  switch (c) {
    case EffectClass::kLarge: return "large";
    case EffectClass::kMedium: return "medium";
    case EffectClass::kSmall: return "small";
    case EffectClass::kEquivalent: return "equivalent";
  }
  return "?";
}

std::string to_string(WilcoxonVerdict v) {
  switch (v) {
    case WilcoxonVerdict::kAGreater: return "a_greater";
    case WilcoxonVerdict::kBGreater: return "b_greater";
    case WilcoxonVerdict::kTie: return "tie";
  }
  return "?";
}

namespace {

struct SkGroup {
  double mean = 0.0;
  double within_ss = 0.0;
  int count = 0;
  int index = 0;  // position in the caller's group list
};

/// Recursive Scott-Knott partition over groups sorted by mean.
void sk_partition(const std::vector<SkGroup>& groups, std::size_t lo, std::size_t hi,
                  double alpha, std::vector<std::vector<int>>& clusters) {
  const std::size_t g = hi - lo;
  if (g < 2) {
    std::vector<int> cluster;
    for (std::size_t i = lo; i < hi; ++i) cluster.push_back(groups[i].index);
    clusters.push_back(std::move(cluster));
    return;
  }

  double grand = 0.0;
  for (std::size_t i = lo; i < hi; ++i) grand += groups[i].mean;
  grand /= static_cast<double>(g);

  // Best two-cluster split of the ordered means.
  double b0 = -1.0;
  std::size_t cut = lo;
  for (std::size_t c = lo + 1; c < hi; ++c) {
    double left = 0.0, right = 0.0;
    for (std::size_t i = lo; i < c; ++i) left += groups[i].mean;
    for (std::size_t i = c; i < hi; ++i) right += groups[i].mean;
    const double kl = static_cast<double>(c - lo);
    const double kr = static_cast<double>(hi - c);
    const double b = kl * std::pow(left / kl - grand, 2.0) +
                     kr * std::pow(right / kr - grand, 2.0);
    if (b > b0) {
      b0 = b;
      cut = c;
    }
  }

  // sigma0^2 blends the dispersion of the means with the sampling error of
  // a mean (pooled within-group variance over the harmonic group size).
  double ss_means = 0.0;
  for (std::size_t i = lo; i < hi; ++i)
    ss_means += std::pow(groups[i].mean - grand, 2.0);
  double pooled_ss = 0.0;
  long dof = 0;
  double harm = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    pooled_ss += groups[i].within_ss;
    dof += groups[i].count - 1;
    harm += 1.0 / groups[i].count;
  }
  harm = static_cast<double>(g) / harm;
  const double s2_mean = dof > 0 ? (pooled_ss / dof) / harm : 0.0;
  const double sigma02 =
      (ss_means + dof * s2_mean) / (static_cast<double>(g) + dof);

  bool split = false;
  if (sigma02 > 0.0) {
    const double lambda = (M_PI / 2.0) * b0 / sigma02;
    const double nu = static_cast<double>(g) / (M_PI - 2.0);
    boost::math::chi_squared_distribution<double> chi2(nu);
    split = lambda > boost::math::quantile(chi2, 1.0 - alpha);
  }

  if (!split) {
    std::vector<int> cluster;
    for (std::size_t i = lo; i < hi; ++i) cluster.push_back(groups[i].index);
    clusters.push_back(std::move(cluster));
    return;
  }
  sk_partition(groups, lo, cut, alpha, clusters);
  sk_partition(groups, cut, hi, alpha, clusters);
}

}  // namespace

std::vector<int> scott_knott(const std::vector<std::vector<double>>& groups,
                             double alpha) {
  if (groups.empty()) throw std::invalid_argument("scott_knott: no groups");
  std::vector<SkGroup> g(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) throw std::invalid_argument("scott_knott: empty group");
    g[i].index = static_cast<int>(i);
    g[i].count = static_cast<int>(groups[i].size());
    g[i].mean = std::accumulate(groups[i].begin(), groups[i].end(), 0.0) / g[i].count;
    for (double v : groups[i]) g[i].within_ss += (v - g[i].mean) * (v - g[i].mean);
  }
  std::sort(g.begin(), g.end(),
            [](const SkGroup& x, const SkGroup& y) { return x.mean < y.mean; });

  std::vector<std::vector<int>> clusters;
  sk_partition(g, 0, g.size(), alpha, clusters);

  // sk_partition emits clusters in ascending mean order.
  std::vector<int> ranks(groups.size(), 0);
  int r = 1;
  for (const auto& cluster : clusters) {
    for (int idx : cluster) ranks[idx] = r;
    ++r;
  }
  return ranks;
}

}  // namespace mlo
