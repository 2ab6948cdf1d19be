#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mlo {

/// SplitMix64 single step; used for seed derivation and hash mixing.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

/// Chains additional values into a derived seed. Order-sensitive.
template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t v, Rest... rest) {
  return derive_seed(splitmix64(seed ^ splitmix64(v)), rest...);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, Rest... rest) {
  return derive_seed(seed, fnv1a64(tag), rest...);
}

/// Deterministic random stream. Wraps mt19937_64 but maps raw 64-bit output
/// to doubles itself: std::uniform_real_distribution and friends are
/// implementation-defined and would break bit-for-bit reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms per call.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform index in [0, n). n must be >= 1.
  std::size_t uniform_index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mlo
