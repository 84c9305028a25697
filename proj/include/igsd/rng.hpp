#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace igsd {

/// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a stable sub-seed from a base seed and a stream of tags.
/// Used everywhere a component needs its own RNG stream so that seeds
/// stay reproducible regardless of evaluation order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t t : tags) h = splitmix64(h ^ t);
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  return std::mt19937_64(mix_seed(seed, tags));
}

}  // namespace igsd
