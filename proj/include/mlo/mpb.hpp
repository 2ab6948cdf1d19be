#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mlo/rng.hpp"

namespace mlo {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Moving Peaks Benchmark configuration. Defaults follow the common
/// Scenario-2-style setup: five cone peaks on [0, 100]^n, heights in
/// [30, 70], widths in [1, 12], height severity 7, shift length 5.
struct MpbConfig {
  int dims = 4;
  int num_peaks = 5;
  Eigen::VectorXd lower;  // per-dimension bounds; empty -> 0
  Eigen::VectorXd upper;  // per-dimension bounds; empty -> 100
  double height_min = 30.0;
  double height_max = 70.0;
  double width_min = 1.0;
  double width_max = 12.0;
  double height_severity = 7.0;
  double width_severity = 1.0;
  double shift_severity = 5.0;  // Euclidean length of each center shift
  double correlation = 0.0;     // lambda in [0,1]; blends shift directions
  int num_environments = 10;    // T
  std::uint64_t seed = 1;

  /// Fills empty bound vectors with [0, 100]^dims.
  void finalize();
  /// Throws ConfigError when invariants are violated.
  void validate() const;

  static MpbConfig defaults(int dims);
};

struct Peak {
  Eigen::VectorXd center;
  double height = 0.0;
  double width = 0.0;
  Eigen::VectorXd prev_shift;  // last applied shift vector
};

/// One time step of the landscape. Immutable by convention: advancing
/// produces a new state.
struct MpbState {
  int time_step = 0;
  std::vector<Peak> peaks;
  Eigen::VectorXd lower;  // copied from config at init
  Eigen::VectorXd upper;
};

/// Samples the t=0 landscape. Deterministic for a fixed (config, seed).
MpbState mpb_init(const MpbConfig& config);

/// Cone landscape value: max_i [H_i - W_i * ||x - X_i||]. Pure; throws on
/// out-of-bounds x. No evaluation accounting happens here.
double mpb_eval(const MpbState& state, const Eigen::VectorXd& x);

/// Advances the landscape one environment. Heights/widths take reflected
/// Gaussian steps; centers move by a length-shift_severity vector whose
/// direction blends a fresh random direction with the previous shift.
/// Deterministic for fixed (config.seed, state.time_step).
MpbState mpb_advance(const MpbState& state, const MpbConfig& config);

/// Apex of the highest peak (ties: lowest index). Analysis-only helper.
std::pair<Eigen::VectorXd, double> mpb_global_optimum(const MpbState& state);

/// Mirrors v into [lo, hi].
double reflect_into(double v, double lo, double hi);

}  // namespace mlo
