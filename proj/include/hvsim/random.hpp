#pragma once

#include <cstdint>
#include <random>

namespace hvsim {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates seeds derived from (base, stream).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(base ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

}  // namespace hvsim
