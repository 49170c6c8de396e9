// SPDX-License-Identifier: Apache-2.0
//
// Golden unblocked attention and the blocked online-softmax attention,
// parameterized by a precision policy.

#pragma once

#include <cstdint>
#include <limits>

#include "pasa/precision.hpp"
#include "pasa/tensor.hpp"

namespace pasa {

enum class M0Mode : uint8_t {
  NegInf,  // running max starts at -inf (standard)
  Zero,    // conformance mode: running max starts at 0
};

struct AttnOptions {
  M0Mode m0 = M0Mode::NegInf;
  int threads = 0;        // 0 = PASA_THREADS env or OpenMP default, 1 = serial
  bool diagnose = false;  // fill the FP64 score-range side channel
};

/// Observed behavior of one kernel run. Store fields describe the values the
/// emulated matrix engine actually emitted; the FP64 fields are the diagnose
/// side channel and never perturb the policy-precision pipeline.
struct RunDiagnostics {
  double store_finite_min = std::numeric_limits<double>::infinity();
  double store_finite_max = -std::numeric_limits<double>::infinity();
  uint64_t store_pos_inf = 0;
  uint64_t store_neg_inf = 0;
  uint64_t store_nan = 0;
  uint64_t out_nonfinite = 0;
  uint64_t out_total = 0;
  bool has_fp64_ranges = false;
  double fp64_unshifted_min = std::numeric_limits<double>::infinity();
  double fp64_unshifted_max = -std::numeric_limits<double>::infinity();
  double fp64_shifted_min = std::numeric_limits<double>::infinity();
  double fp64_shifted_max = -std::numeric_limits<double>::infinity();

  void merge(const RunDiagnostics& other);
  bool store_overflowed() const {
    return store_pos_inf + store_neg_inf + store_nan > 0;
  }
};

/// Unblocked FP64 reference: S = QK^T, S /= sqrt(d), P = row softmax with max
/// subtraction, O = PV. The RMSE golden baseline for every policy run.
Tensor4D golden_attention(const AttentionProblem& problem, int threads = 0);

/// Blocked two-level loop with running max and denominator. GEMM store at
/// policy precision, static scaling applied after the store rounding, vector
/// ops at policy.vector_prec. INF/NAN propagate; overflow is observable.
Tensor4D flash_attention(const AttentionProblem& problem,
                         const PrecisionPolicy& policy,
                         const AttnOptions& opts = {},
                         RunDiagnostics* diag = nullptr);

namespace detail {
double nan_max(double a, double b);
void track_store(const Matrix2D& s, RunDiagnostics& d);
void track_fp64_range(const Matrix2D& s, double& lo, double& hi);
}  // namespace detail

}  // namespace pasa
