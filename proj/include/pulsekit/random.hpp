#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace pulsekit::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for (seed, key).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t key) { return splitmix64(seed ^ splitmix64(key + 1)); }

// The draws below avoid std:: distributions so sequences match across
// standard libraries.

/// 53-bit uniform in [0, 1).
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

/// Integer in [0, n) by rejection.
inline std::uint64_t below(std::mt19937_64& g, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = g();
  } while (v >= limit);
  return v % n;
}

/// Standard normal (Box-Muller, one value per call).
inline double normal(std::mt19937_64& g) {
  const double u1 = 1.0 - uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename It>
void shuffle(It first, It last, std::mt19937_64& g) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = below(g, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace pulsekit::rng
