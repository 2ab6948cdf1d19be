#include "mlo/mpb.hpp"

#include <cmath>
#include <limits>

namespace mlo {

void MpbConfig::finalize() {
  if (lower.size() == 0) lower = Eigen::VectorXd::Zero(dims);
  if (upper.size() == 0) upper = Eigen::VectorXd::Constant(dims, 100.0);
}

void MpbConfig::validate() const {
  if (dims < 1) throw ConfigError("mpb: dims must be positive");
  if (num_peaks < 1) throw ConfigError("mpb: num_peaks must be positive");
  if (lower.size() != dims || upper.size() != dims)
    throw ConfigError("mpb: bounds must have one entry per dimension");
  for (int i = 0; i < dims; ++i)
    if (!(lower[i] < upper[i])) throw ConfigError("mpb: degenerate bounds");
  if (!(height_min > 0.0) || height_max < height_min)
    throw ConfigError("mpb: height range must be positive and non-empty");
  if (!(width_min > 0.0) || width_max < width_min)
    throw ConfigError("mpb: width range must be positive and non-empty");
  if (height_severity < 0.0 || width_severity < 0.0 || shift_severity < 0.0)
    throw ConfigError("mpb: severities must be non-negative");
  if (correlation < 0.0 || correlation > 1.0)
    throw ConfigError("mpb: correlation must lie in [0,1]");
  if (num_environments < 2)
    throw ConfigError("mpb: num_environments must exceed 1");
}

MpbConfig MpbConfig::defaults(int dims) {
  MpbConfig cfg;
  cfg.dims = dims;
  cfg.finalize();
  return cfg;
}

double reflect_into(double v, double lo, double hi) {
  const double range = hi - lo;
  if (range <= 0.0) return lo;
  // Fold into a period of 2*range, then mirror the upper half.
  double u = std::fmod(v - lo, 2.0 * range);
  if (u < 0.0) u += 2.0 * range;
  return u <= range ? lo + u : hi - (u - range);
}

namespace {

Eigen::VectorXd random_unit_vector(int dims, Rng& rng) {
  Eigen::VectorXd v(dims);
  double norm2;
  do {
    for (int i = 0; i < dims; ++i) v[i] = rng.normal();
    norm2 = v.squaredNorm();
  } while (norm2 < 1e-24);
  return v / std::sqrt(norm2);
}

}  // namespace

MpbState mpb_init(const MpbConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, "mpb-init"));
  MpbState state;
  state.time_step = 0;
  state.lower = config.lower;
  state.upper = config.upper;
  state.peaks.resize(config.num_peaks);
  for (auto& peak : state.peaks) {
    peak.center.resize(config.dims);
    for (int i = 0; i < config.dims; ++i)
      peak.center[i] = rng.uniform(config.lower[i], config.upper[i]);
    peak.height = rng.uniform(config.height_min, config.height_max);
    peak.width = rng.uniform(config.width_min, config.width_max);
    peak.prev_shift = Eigen::VectorXd::Zero(config.dims);
  }
  return state;
}

double mpb_eval(const MpbState& state, const Eigen::VectorXd& x) {
  if (x.size() != state.lower.size())
    throw std::invalid_argument("mpb_eval: dimension mismatch");
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < state.lower[i] || x[i] > state.upper[i])
      throw std::invalid_argument("mpb_eval: x outside bounds");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& peak : state.peaks) {
    const double v = peak.height - peak.width * (x - peak.center).norm();
    if (v > best) best = v;
  }
  return best;
}

MpbState mpb_advance(const MpbState& state, const MpbConfig& config) {
  config.validate();
  const int next_step = state.time_step + 1;
  if (next_step >= config.num_environments)
    throw std::invalid_argument("mpb_advance: past the final environment");

  Rng rng(derive_seed(config.seed, "mpb-advance",
                      static_cast<std::uint64_t>(next_step)));
  MpbState next = state;
  next.time_step = next_step;
  for (auto& peak : next.peaks) {
    peak.height = reflect_into(peak.height + config.height_severity * rng.normal(),
                               config.height_min, config.height_max);
    peak.width = reflect_into(peak.width + config.width_severity * rng.normal(),
                              config.width_min, config.width_max);

    // Branke-style correlated shift: blend a fresh direction with the
    // previous shift, rescale to exactly shift_severity.
    Eigen::VectorXd r = random_unit_vector(config.dims, rng);
    Eigen::VectorXd blend =
        (1.0 - config.correlation) * r + config.correlation * peak.prev_shift;
    double norm = blend.norm();
    if (norm < 1e-24) {
      blend = r;
      norm = 1.0;
    }
    Eigen::VectorXd shift = config.shift_severity * blend / norm;

    Eigen::VectorXd moved = peak.center + shift;
    for (int i = 0; i < config.dims; ++i) {
      const double folded = reflect_into(moved[i], config.lower[i], config.upper[i]);
      if (folded != moved[i]) shift[i] = -shift[i];  // bounce off the wall
      moved[i] = folded;
    }
    peak.center = moved;
    peak.prev_shift = shift;
  }
  return next;
}

std::pair<Eigen::VectorXd, double> mpb_global_optimum(const MpbState& state) {
  if (state.peaks.empty())
    throw std::invalid_argument("mpb_global_optimum: empty state");
  std::size_t best = 0;
  for (std::size_t i = 1; i < state.peaks.size(); ++i)
    if (state.peaks[i].height > state.peaks[best].height) best = i;
  return {state.peaks[best].center, state.peaks[best].height};
}

}  // namespace mlo
