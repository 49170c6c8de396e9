// SPDX-License-Identifier: Apache-2.0

#include "pasa/precision.hpp"

namespace pasa {

std::string_view to_string(Prec p) {
  switch (p) {
    case Prec::FP64: return "FP64";
    case Prec::FP32: return "FP32";
    case Prec::FP16: return "FP16";
  }
  return "FP64";
}

std::optional<Prec> parse_prec(std::string_view name) {
  if (name == "FP64" || name == "fp64") return Prec::FP64;
  if (name == "FP32" || name == "fp32") return Prec::FP32;
  if (name == "FP16" || name == "fp16") return Prec::FP16;
  return std::nullopt;
}

PrecisionPolicy policy_for(PolicyId id) {
  switch (id) {
    case PolicyId::GoldenFp64:
      return {id, Prec::FP64, Prec::FP64, Prec::FP64};
    case PolicyId::FaFp32:
      return {id, Prec::FP32, Prec::FP32, Prec::FP32};
    case PolicyId::FaPartialFp16:
      // Matrix engine accumulates in FP32 and emits FP16; vector units FP16.
      return {id, Prec::FP32, Prec::FP16, Prec::FP16};
    case PolicyId::FaFullFp16:
      return {id, Prec::FP16, Prec::FP16, Prec::FP16};
    case PolicyId::PasaFp16:
      return {id, Prec::FP32, Prec::FP16, Prec::FP16};
  }
  return {};
}

std::string_view to_string(PolicyId id) {
  switch (id) {
    case PolicyId::GoldenFp64: return "GOLDEN_FP64";
    case PolicyId::FaFp32: return "FA_FP32";
    case PolicyId::FaPartialFp16: return "FA_PARTIAL_FP16";
    case PolicyId::FaFullFp16: return "FA_FULL_FP16";
    case PolicyId::PasaFp16: return "PASA_FP16";
  }
  return "GOLDEN_FP64";
}

std::optional<PolicyId> parse_policy(std::string_view name) {
  if (name == "GOLDEN_FP64") return PolicyId::GoldenFp64;
  if (name == "FA_FP32") return PolicyId::FaFp32;
  if (name == "FA_PARTIAL_FP16") return PolicyId::FaPartialFp16;
  if (name == "FA_FULL_FP16") return PolicyId::FaFullFp16;
  if (name == "PASA_FP16") return PolicyId::PasaFp16;
  return std::nullopt;
}

}  // namespace pasa
