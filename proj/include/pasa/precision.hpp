// SPDX-License-Identifier: Apache-2.0
//
// Precision tags and the per-stage precision assignment of a pipeline run.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "pasa/half.hpp"

namespace pasa {

enum class Prec : uint8_t { FP64, FP32, FP16 };

/// Round x to the given precision. FP32 rounding through a double temporary
/// is exact for the same reason the binary16 path is (24 < 53/2 - 1).
inline double round_to(Prec p, double x) noexcept {
  switch (p) {
    case Prec::FP64: return x;
    case Prec::FP32: return static_cast<double>(static_cast<float>(x));
    case Prec::FP16: return f16_round(x);
  }
  return x;
}

/// exp in extended precision followed by one rounding at precision p.
inline double exp_at(Prec p, double x) noexcept {
  return round_to(p, static_cast<double>(expl(static_cast<long double>(x))));
}

inline bool representable_at(Prec p, double x) noexcept {
  return std::isnan(x) || round_to(p, x) == x;
}

std::string_view to_string(Prec p);
std::optional<Prec> parse_prec(std::string_view name);

enum class PolicyId : uint8_t {
  GoldenFp64,
  FaFp32,
  FaPartialFp16,
  FaFullFp16,
  PasaFp16,
};

/// Which numeric format each pipeline stage uses: GEMM accumulation, GEMM
/// output store, and vector-unit ops (scale, exp, reductions, updates).
struct PrecisionPolicy {
  PolicyId id = PolicyId::GoldenFp64;
  Prec gemm_accum = Prec::FP64;
  Prec gemm_store = Prec::FP64;
  Prec vector_prec = Prec::FP64;
};

PrecisionPolicy policy_for(PolicyId id);
std::string_view to_string(PolicyId id);
std::optional<PolicyId> parse_policy(std::string_view name);

}  // namespace pasa
