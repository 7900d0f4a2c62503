#pragma once

#include <cstdint>
#include <random>

namespace mimodelay {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); used to give every Monte-Carlo
/// chunk, worker or hop its own reproducible substream.
inline Rng substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6d696d6fU};
  return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mimodelay
