#pragma once

#include <cstdint>
#include <random>

namespace proplab {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates consecutive integers.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the index-th independent stream under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) { return mix64(master + index); }

}  // namespace proplab
