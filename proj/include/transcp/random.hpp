#pragma once

#include <cstdint>
#include <random>

namespace transcp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream `stream` derived from a master seed; replicate i of any
// Monte Carlo loop draws from stream_rng(seed, i) regardless of thread count.
inline Rng stream_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(master) ^ splitmix64(stream + 0x51ED27ULL)));
}

}  // namespace transcp
