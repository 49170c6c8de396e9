// SPDX-License-Identifier: Apache-2.0
//
// Counter-based deterministic random generation: every draw is a pure
// function of (seed, stream, counter) through the SplitMix64 finalizer, so
// tensors are reproducible bit-for-bit regardless of evaluation order.

#pragma once

#include <cmath>
#include <cstdint>

namespace pasa::rng {

inline uint64_t splitmix(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline uint64_t hash3(uint64_t seed, uint64_t stream, uint64_t counter) {
  return splitmix(splitmix(splitmix(seed) ^ stream) ^ counter);
}

/// Uniform draw in [0, 1).
inline double u01(uint64_t seed, uint64_t stream, uint64_t counter) {
  return static_cast<double>(hash3(seed, stream, counter) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two independent counters.
inline double gaussian(uint64_t seed, uint64_t stream, uint64_t index) {
  const double u1 = 1.0 - u01(seed, stream, 2 * index);      // (0, 1]
  const double u2 = u01(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline bool bernoulli(uint64_t seed, uint64_t stream, uint64_t index,
                      double p) {
  return u01(seed, stream, index) < p;
}

}  // namespace pasa::rng
