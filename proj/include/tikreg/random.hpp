#pragma once

#include <cstdint>
#include <random>

#include "tikreg/banach.hpp"

namespace tikreg {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent per-cell seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(master) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

inline Vec gaussian_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace tikreg
