#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tailtopo {

using Engine = std::mt19937_64;

// splitmix64 finalizer; used to derive independent streams from (seed, stage, index...).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (auto p : path) h = mix64(h ^ mix64(p));
  return h;
}

// Stream tags for derive_seed.
enum class Stage : std::uint64_t {
  simulate = 1,
  fuzzy_pick = 2,
  fcm_init = 3,
  oracle = 4,
};

inline std::uint64_t derive_seed(std::uint64_t seed, Stage stage, std::uint64_t index = 0) {
  return derive_seed(seed, {static_cast<std::uint64_t>(stage), index});
}

// Uniform on the open interval (0,1) from 53 random bits. Platform-independent, unlike
// std::uniform_real_distribution.
inline double uniform_open(Engine& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

inline bool coin_flip(Engine& eng) { return (eng() >> 63) != 0; }

}  // namespace tailtopo
