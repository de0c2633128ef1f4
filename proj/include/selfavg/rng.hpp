#pragma once

#include <cstdint>
#include <random>

namespace selfavg {

/// Stafford/Vigna splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based stream splitting: the seed of child `index` depends only on
/// (parent, index), never on the order in which children are visited.
///   child = splitmix64(parent ^ splitmix64(index + 0xA5A5...))
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return splitmix64(parent ^ splitmix64(index + 0xA5A5A5A5A5A5A5A5ULL));
}

/// mt19937_64 (fully specified by the standard) plus hand-written variate
/// generators, so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, bound) (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound);

  /// +1 or -1 with probability 1/2.
  int sign() { return (engine_() >> 63) ? 1 : -1; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Exact Poisson variate: inversion for mean < 30, Hormann's PTRS
  /// transformed rejection otherwise.
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t poisson_inversion(double mean);
  std::uint64_t poisson_ptrs(double mean);

  std::mt19937_64 engine_;
};

}  // namespace selfavg
