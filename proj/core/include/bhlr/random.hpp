#pragma once

#include <cstdint>
#include <random>

namespace bhlr {

/// Portable seeded generator.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. All derived variates (bounded integers, uniforms, normals,
/// Poisson counts) are computed here rather than through <random>
/// distributions, whose algorithms are implementation-defined. Independent
/// streams are obtained by mixing (seed, stream) through SplitMix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via the Marsaglia polar method.
  double normal();

  /// Poisson count. Means up to 30 use sequential inversion; larger means are
  /// split into a sum of independent Poisson(<=30) draws.
  std::uint64_t poisson(double mean);

  bool bernoulli(double p) { return uniform01() < p; }

  /// Derive an independent generator for a named sub-task.
  Rng split(std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t poisson_inversion(double mean);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bhlr
