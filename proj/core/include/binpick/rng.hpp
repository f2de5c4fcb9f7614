#pragma once

#include <cstdint>
#include <random>

namespace binpick {

// splitmix64 finalizer; used to derive independent seed streams from a base
// seed plus structural indices (bin, trial, round, robot, ...).
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
  std::uint64_t h = mix_seed(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
  if constexpr (sizeof...(rest) == 0) {
    return h;
  } else {
    return mix_seed(h, rest...);
  }
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace binpick
