#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace bhlr::detail {

__extension__ typedef unsigned __int128 u128;

inline constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

inline std::uint64_t sat_pow(std::uint64_t base, std::size_t e) {
  std::uint64_t r = 1;
  for (std::size_t k = 0; k < e; ++k) r = sat_mul(r, base);
  return r;
}

/// n (n-1) ... (n-k+1).
inline std::uint64_t falling(std::uint64_t n, std::size_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < k; ++i) r = sat_mul(r, n - i);
  return r;
}

inline std::uint64_t binom(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  u128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > kSaturated) return kSaturated;
  }
  return static_cast<std::uint64_t>(r);
}

}  // namespace bhlr::detail
