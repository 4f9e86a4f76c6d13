#pragma once

#include <cstdint>
#include <random>

namespace nvmem {

using Rng = std::mt19937_64;

// SplitMix64 finaliser; decorrelates nearby integers.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for work unit `index` under `master_seed`. Streams only
// depend on (master_seed, stream_tag, index), never on thread scheduling.
inline Rng stream_for(std::uint64_t master_seed, std::uint64_t index, std::uint64_t stream_tag = 0) {
  return Rng(mix64(mix64(master_seed ^ mix64(stream_tag)) + index));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) { return p > 0.0 && uniform01(rng) < p; }

}  // namespace nvmem
