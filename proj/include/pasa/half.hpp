// SPDX-License-Identifier: Apache-2.0
//
// Software emulation of IEEE 754 binary16 with round-to-nearest-even.
//
// Values are carried in doubles that are exactly representable in binary16;
// the 16-bit pattern type appears only at encode/decode boundaries. Because
// binary64 has more than 2*11+2 significand bits, computing +,-,*,/ on two
// carried values in double and then rounding once to binary16 yields the
// correctly rounded binary16 result (the intermediate binary64 rounding is
// innocuous), so the emulation is bit-exact, not approximate.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace pasa {

inline constexpr double kF16Max = 65504.0;       // largest finite binary16
inline constexpr double kF16OverflowEdge = 65520.0;  // midpoint to 2^16; >= here rounds to inf
inline constexpr double kF16MinNormal = 0x1p-14;
inline constexpr double kF16MinSubnormal = 0x1p-24;

/// Round a double to the nearest binary16 value (ties to even), returned as
/// a double. Magnitudes that round past 65504 become +/-inf; subnormals and
/// signed zeros are preserved; NaN propagates.
inline double f16_round(double x) noexcept {
  if (!std::isfinite(x)) return x;
  const double a = std::fabs(x);
  if (a >= kF16OverflowEdge) {
    return std::copysign(std::numeric_limits<double>::infinity(), x);
  }
  if (a < kF16MinNormal) {
    // Subnormal range: fixed quantum 2^-24.
    const double r = std::nearbyint(a * 0x1p24) * 0x1p-24;
    return std::copysign(r, x);
  }
  // Normal range: quantum is 2^(e-11) for a in [2^(e-1), 2^e). All scaling
  // below is by powers of two and therefore exact.
  int e = 0;
  std::frexp(a, &e);
  const double scale = std::ldexp(1.0, 11 - e);
  const double r = std::nearbyint(a * scale) / scale;
  return std::copysign(r, x);
}

/// True if v is exactly representable in binary16 (NaN counts as representable).
inline bool f16_is_value(double v) noexcept {
  if (std::isnan(v)) return true;
  return f16_round(v) == v;
}

/// Pack an exactly-representable binary16 value into its bit pattern.
uint16_t f16_encode(double v) noexcept;

/// Unpack a binary16 bit pattern into the exact double it denotes.
double f16_decode(uint16_t bits) noexcept;

// Arithmetic on carried values: exact double op, then one binary16 rounding.
inline double f16_add(double a, double b) noexcept { return f16_round(a + b); }
inline double f16_sub(double a, double b) noexcept { return f16_round(a - b); }
inline double f16_mul(double a, double b) noexcept { return f16_round(a * b); }
inline double f16_div(double a, double b) noexcept { return f16_round(a / b); }

/// exp evaluated in extended precision, then rounded to binary16.
double f16_exp(double x) noexcept;

}  // namespace pasa
