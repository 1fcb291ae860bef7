#include "bhlr/random.hpp"

#include <cmath>
#include <limits>

#include "bhlr/errors.hpp"

namespace bhlr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), engine_(splitmix64(seed ^ splitmix64(stream + 0x5851F42D4C957F2DULL))) {}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw ConfigError("uniform_index: bound must be positive");
  // Rejection on the top multiple of bound keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::uint64_t Rng::poisson_inversion(double mean) {
  double p = std::exp(-mean);
  double cdf = p;
  const double u = uniform01();
  std::uint64_t k = 0;
  while (u >= cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    const double next = cdf + p;
    if (next == cdf) break;  // tail below double resolution
    cdf = next;
  }
  return k;
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("poisson: mean must be finite and >= 0");
  constexpr double kChunk = 30.0;
  std::uint64_t total = 0;
  while (mean > kChunk) {
    total += poisson_inversion(kChunk);
    mean -= kChunk;
  }
  if (mean > 0.0) total += poisson_inversion(mean);
  return total;
}

Rng Rng::split(std::uint64_t stream) { return Rng(splitmix64(seed_ + 0x2545F4914F6CDD1DULL * (stream + 1)), stream); }

}  // namespace bhlr
