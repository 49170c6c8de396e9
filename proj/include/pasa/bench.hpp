// SPDX-License-Identifier: Apache-2.0
//
// Benchmark generation (uniform and hybrid distributions), error metrics
// (relative RMSE, NAN statistics) and score-range diagnostics.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pasa/attention.hpp"
#include "pasa/pasa.hpp"
#include "pasa/precision.hpp"
#include "pasa/tensor.hpp"

namespace pasa {

struct ZeroNormError : std::domain_error {
  using std::domain_error::domain_error;
};

enum class DistKind : uint8_t { Uniform, Hybrid };

std::string_view to_string(DistKind k);

struct DistributionSpec {
  DistKind kind = DistKind::Uniform;
  double x0 = 0.0;    // mean
  double am = 0.0;    // amplitude
  double p = 0.001;   // Bernoulli gate probability (hybrid only)
  uint64_t seed = 0;
  size_t batch = 1, heads = 1, seq = 128, dim = 64;
};

struct GeneratedInputs {
  Tensor4D q, k, v;
};

/// Deterministic Q/K/V generation; every element is a pure function of
/// (seed, tensor, index). Values are rounded to the FP16 input precision.
GeneratedInputs generate(const DistributionSpec& spec);

/// ||computed - golden||_2 / ||golden||_2 at FP64 (compensated summation).
/// Returns NaN when computed contains NaN/INF; throws ZeroNormError when the
/// golden norm is zero.
double rmse(const Tensor4D& computed, const Tensor4D& golden);

/// Percentage of NAN or INF elements.
double nan_stats(const Tensor4D& t);

/// FP64 side-channel ranges for one (batch, head) slice: raw K vs K^T*M and
/// scaled scores Q*K^T/alpha vs shifted scores Q*(K^T*M).
struct RangeEntry {
  size_t batch = 0, head = 0;
  double k_before_min = 0, k_before_max = 0;
  double k_after_min = 0, k_after_max = 0;
  double s_before_min = 0, s_before_max = 0;
  double s_after_min = 0, s_after_max = 0;
};

struct RangeReport {
  std::vector<RangeEntry> per_head;
  RangeEntry total;
  /// Overflow of the FP16 store is predicted exactly when the pre-scale
  /// score magnitude (alpha * max |S/alpha|) crosses the binary16 boundary.
  bool overflow_predicted(double alpha) const;
};

RangeReport range_report(const AttentionProblem& problem,
                         const PasaParams& params, int threads = 0);

/// One sweep cell result; mirrors the CSV schema exactly.
struct RunReport {
  std::string policy;
  std::string kind;
  double x0 = 0, am = 0, p = 0;
  uint64_t seed = 0;
  size_t batch = 0, heads = 0, seq = 0, dim = 0;
  double beta = 0;
  double rmse = 0;
  double nan_pct = 0;
  bool has_ranges = false;
  double s_min_before = 0, s_max_before = 0;
  double s_min_after = 0, s_max_after = 0;
  double wall_s = 0;
  std::string error;  // nonempty when the cell failed; never aborts a sweep
};

struct SweepOptions {
  std::vector<PolicyId> policies;
  double beta = 0.984497;
  size_t s1 = 128, s2 = 128;
  bool diagnose = false;
  M0Mode m0 = M0Mode::NegInf;
  int threads = 0;
};

/// For each spec: generate once, run every policy on byte-identical inputs,
/// compare against the shared FP64 golden run.
std::vector<RunReport> sweep(const std::vector<DistributionSpec>& specs,
                             const SweepOptions& opts);

inline constexpr const char* kReportCsvHeader =
    "policy,kind,x0,Am,p,seed,B,N,S,d,beta,rmse,nan_pct,s_min_before,"
    "s_max_before,s_min_after,s_max_after,wall_s";

std::string report_csv(const std::vector<RunReport>& rows);
std::string report_json_rows(const std::vector<RunReport>& rows);
std::string range_csv(const RangeReport& report);

}  // namespace pasa
