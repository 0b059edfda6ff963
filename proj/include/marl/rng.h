#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace marl {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  // open interval (0,1); keeps log(-log(u)) finite
  std::uniform_real_distribution<double> d(1e-12, 1.0 - 1e-12);
  return d(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

inline double gumbel_noise(Rng& rng) { return -std::log(-std::log(uniform01(rng))); }

inline std::uint64_t fnv1a(const void* bytes, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a_str(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace marl
