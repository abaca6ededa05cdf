#pragma once

// Counter-based seeding: every (seed, stream, index) triple gets its own
// independent generator, so parallel and serial runs draw identical numbers.

#include <cstdint>
#include <random>

namespace modematch {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t k = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware count).
template <class Body>
void parallel_for(int n, int threads, Body&& body);

}  // namespace modematch

#include "modematch/detail/parallel.hpp"
