#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cemux::detail {

/// SplitMix64 finalizer. Used to expand one master seed into many stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent-looking seed for stream `a` (and sub-stream `b`)
/// of a master seed. Pure function; the schedule is fixed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(a + 0x632be59bd9b4e019ULL)) ^
                    splitmix64(b + 0x3c6ef372fe94f82aULL));
}

// std::mt19937_64 has a standardized output sequence; the distributions in
// <random> do not, so the helpers below are written out to keep results
// identical across standard libraries.

/// Uniform integer in [0, bound) by rejection. bound > 0.
inline std::uint64_t uniform_below(std::mt19937_64& eng, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = eng();
  while (x >= limit) x = eng();
  return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_real(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

/// Standard normal deviate (Box-Muller, one value per call).
inline double standard_normal(std::mt19937_64& eng) {
  double u1 = uniform01(eng);
  while (u1 <= 0.0) u1 = uniform01(eng);
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cemux::detail
