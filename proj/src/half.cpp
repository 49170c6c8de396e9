// SPDX-License-Identifier: Apache-2.0

#include "pasa/half.hpp"

#include <cassert>

namespace pasa {

uint16_t f16_encode(double v) noexcept {
  if (std::isnan(v)) return 0x7E00;  // canonical quiet NaN
  const uint16_t sign = std::signbit(v) ? 0x8000 : 0x0000;
  const double a = std::fabs(v);
  if (std::isinf(v)) return sign | 0x7C00;
  if (a == 0.0) return sign;
  assert(f16_round(v) == v && "f16_encode requires an exact binary16 value");
  if (a < kF16MinNormal) {
    // Subnormal: magnitude is an integer multiple of 2^-24.
    const auto frac = static_cast<uint16_t>(a * 0x1p24);
    return sign | frac;
  }
  int e = 0;
  const double m = std::frexp(a, &e);  // a = m * 2^e, m in [0.5, 1)
  const int unbiased = e - 1;          // a = (2m) * 2^unbiased, 2m in [1, 2)
  const auto frac = static_cast<uint16_t>((2.0 * m - 1.0) * 1024.0);
  return sign | static_cast<uint16_t>((unbiased + 15) << 10) | frac;
}

double f16_decode(uint16_t bits) noexcept {
  const bool neg = (bits & 0x8000) != 0;
  const int exp_field = (bits >> 10) & 0x1F;
  const int frac = bits & 0x3FF;
  double v;
  if (exp_field == 0x1F) {
    v = frac ? std::numeric_limits<double>::quiet_NaN()
             : std::numeric_limits<double>::infinity();
  } else if (exp_field == 0) {
    v = std::ldexp(static_cast<double>(frac), -24);
  } else {
    v = std::ldexp(static_cast<double>(1024 + frac), exp_field - 25);
  }
  return neg ? -v : v;
}

double f16_exp(double x) noexcept {
  // expl keeps at least 64 significand bits on x86, far more than the
  // 2*11+2 needed for the final binary16 rounding to be correct.
  return f16_round(static_cast<double>(expl(static_cast<long double>(x))));
}

}  // namespace pasa
