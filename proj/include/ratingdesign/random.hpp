#pragma once

#include <cstdint>
#include <random>

namespace ratingdesign {

using Rng = std::mt19937_64;

// Independent stream for (seed, index); used so parallel or serial evaluation
// of runs/replicates sees the same draws.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

}  // namespace ratingdesign
