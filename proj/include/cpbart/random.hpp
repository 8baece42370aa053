#pragma once

#include <cstdint>
#include <random>

namespace cpbart {

using Rng = std::mt19937_64;

/// Independent stream for replicate/fold/chain `stream` of a run seeded with `seed`.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline int uniform_index(Rng& rng, int n) {
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

inline double std_normal_draw(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace cpbart
