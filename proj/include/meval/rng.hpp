#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace meval {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hashes (seed, index...) into an independent stream seed. All stochastic
// operations key their randomness on tuples like (seed, resample) or
// (seed, segment, system) so results never depend on execution schedule.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = splitmix64(seed);
  for (std::uint64_t p : parts) s = splitmix64(s ^ splitmix64(p + 0x9e3779b97f4a7c15ULL));
  return s;
}

inline std::mt19937_64 make_engine(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> parts) {
  return std::mt19937_64(derive_seed(seed, parts));
}

// Uniform in [0, 1) from the top 53 bits; avoids the implementation-defined
// behavior of std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Hash-based uniform in [0, 1) with no engine state; one draw per tuple.
inline double derived_unit_uniform(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> parts) {
  return static_cast<double>(derive_seed(seed, parts) >> 11) * 0x1.0p-53;
}

// Box-Muller standard normal. Hand-rolled so outputs do not depend on the
// standard library's normal_distribution implementation.
inline double normal_sample(std::mt19937_64& eng) {
  const double u1 = 1.0 - unit_uniform(eng);  // (0, 1], keeps log finite
  const double u2 = unit_uniform(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace meval
