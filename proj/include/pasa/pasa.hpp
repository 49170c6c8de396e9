// SPDX-License-Identifier: Apache-2.0
//
// Pseudo-average shifting attention: shifting-matrix construction, key
// preprocessing, online global-mean recovery, corrected softmax statistics
// and output accumulation.

#pragma once

#include <stdexcept>
#include <vector>

#include "pasa/attention.hpp"
#include "pasa/matrix.hpp"
#include "pasa/precision.hpp"
#include "pasa/tensor.hpp"

namespace pasa {

struct SingularMatrixError : std::domain_error {
  using std::domain_error::domain_error;
};

/// s2 x s2 matrix with diagonal (1 - beta/s2)/alpha and off-diagonal
/// -beta/(alpha*s2), each entry rounded once to prec. Right-multiplying K^T
/// by it removes the fraction beta of each block's row mean and applies the
/// static 1/alpha scale in the same GEMM.
Matrix2D build_shifting_matrix(size_t s2, double beta, double alpha,
                               Prec prec);

/// Closed-form inverse of (I - lambda*J): I + lambda/(1 - lambda*s) * J.
/// Throws SingularMatrixError when lambda*s == 1.
Matrix2D shifting_matrix_inverse(size_t s, double lambda);

/// K^T * M at policy precision; K_block is s2 x d, result is d x s2.
Matrix2D preprocess_keys(const Matrix2D& k_block, const Matrix2D& m,
                         const PrecisionPolicy& policy);

/// Running arithmetic mean of per-block row means, at vector precision.
/// For j == 1 the previous mean is ignored.
std::vector<double> recover_global_mean(const std::vector<double>& f_prev,
                                        const std::vector<double>& s_bar_local,
                                        size_t j, Prec prec);

struct CorrectionTerms {
  std::vector<double> dm_prev;  // beta*(F_prev - F_new)/(1-beta)
  std::vector<double> dm_cur;   // beta*(S_bar  - F_new)/(1-beta)
};

/// The beta/(1-beta) factor is materialized once at FP64 (it equals the
/// solved invariance when beta came from the solver); only the per-element
/// product rounds at vector precision.
CorrectionTerms correction_terms(const std::vector<double>& f_prev,
                                 const std::vector<double>& f_new,
                                 const std::vector<double>& s_bar_local,
                                 double beta, Prec prec);

struct PasaParams {
  double beta = 0.0;
  double alpha = 1.0;
  size_t s2 = 0;
  Matrix2D m;  // s2 x s2 shifting matrix at the pipeline's matrix precision

  static PasaParams make(size_t s2, double beta, double alpha, Prec prec);
};

/// Per block-row online state: corrected running max m, corrected denominator
/// l, global pseudo-average over consumed blocks, and the output accumulator.
class OnlineState {
 public:
  OnlineState(size_t s1, size_t dim, Prec vec_prec);

  /// Consume one shifted score block (already scaled and shifted by M) and
  /// the matching V block.
  void absorb(const Matrix2D& s_shifted, const Matrix2D& v_block, double beta,
              const PrecisionPolicy& policy);

  /// Final normalization O / l.
  Matrix2D finalize() const;

  size_t blocks_consumed() const { return j_; }
  const std::vector<double>& running_max() const { return m_; }
  const std::vector<double>& denominator() const { return l_; }
  const std::vector<double>& global_mean() const { return f_bar_; }

 private:
  size_t j_ = 0;
  Prec vec_;
  std::vector<double> m_, l_, f_bar_;
  Matrix2D o_acc_;
};

/// The full algorithm: preprocess keys once per (batch, head, j), then for
/// every block row run the shifted online softmax with global-mean recovery.
/// beta == 0 degrades exactly to the blocked attention path (bit-identical).
Tensor4D pasa_attention(const AttentionProblem& problem,
                        const PasaParams& params,
                        const PrecisionPolicy& policy,
                        const AttnOptions& opts = {},
                        RunDiagnostics* diag = nullptr);

}  // namespace pasa
