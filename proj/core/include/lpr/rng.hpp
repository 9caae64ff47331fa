#pragma once

#include <cstdint>
#include <random>

namespace lpr {

using Rng = std::mt19937_64;

// splitmix64 finalizer; good avalanche, used only for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives a decorrelated seed for a named stream of a master seed, so that
// independent consumers (scene generation, planners, exploration, ...) never
// share engine state. Stream ids are small constants chosen per call site.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return mix64(mix64(master ^ 0x6a09e667f3bcc908ull) + mix64(stream) * 3 + index);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

}  // namespace lpr
