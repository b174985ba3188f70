#pragma once

#include <cstdint>
#include <random>

namespace vemstab {

// Portable deterministic uniform draw in [0,1): fixed mapping from the raw
// 64-bit stream, independent of the standard library's distribution choices.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_pm(std::mt19937_64& rng, double amplitude) {
  return amplitude * (2.0 * uniform01(rng) - 1.0);
}

}  // namespace vemstab
