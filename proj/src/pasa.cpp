// SPDX-License-Identifier: Apache-2.0

#include "pasa/pasa.hpp"

#include <cmath>
#include <string>

#include "pasa/parallel.hpp"

namespace pasa {

namespace {
const PrecisionPolicy kFp64Policy = policy_for(PolicyId::GoldenFp64);
}

Matrix2D build_shifting_matrix(size_t s2, double beta, double alpha,
                               Prec prec) {
  if (s2 == 0) throw std::invalid_argument("shifting matrix: s2 must be >= 1");
  if (beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("shifting matrix: beta must lie in [0, 1]");
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("shifting matrix: alpha must be positive");
  }
  const double n = static_cast<double>(s2);
  const double diag = round_to(prec, (1.0 - beta / n) / alpha);
  const double off = round_to(prec, -beta / (alpha * n));
  Matrix2D m(s2, s2, prec);
  for (size_t r = 0; r < s2; ++r) {
    double* row = m.row(r);
    for (size_t c = 0; c < s2; ++c) row[c] = off;
    row[r] = diag;
  }
  return m;
}

Matrix2D shifting_matrix_inverse(size_t s, double lambda) {
  const double denom = 1.0 - lambda * static_cast<double>(s);
  if (denom == 0.0) {
    throw SingularMatrixError(
        "shifting matrix is singular: lambda * s == 1 (beta == 1)");
  }
  const double off = lambda / denom;
  Matrix2D m(s, s, Prec::FP64);
  for (size_t r = 0; r < s; ++r) {
    double* row = m.row(r);
    for (size_t c = 0; c < s; ++c) row[c] = off;
    row[r] = 1.0 + off;
  }
  return m;
}

Matrix2D preprocess_keys(const Matrix2D& k_block, const Matrix2D& m,
                         const PrecisionPolicy& policy) {
  return gemm(transpose(k_block), m, false, policy);
}

std::vector<double> recover_global_mean(const std::vector<double>& f_prev,
                                        const std::vector<double>& s_bar_local,
                                        size_t j, Prec prec) {
  if (j == 0) throw std::invalid_argument("global mean: j must be >= 1");
  if (j == 1) return s_bar_local;
  if (f_prev.size() != s_bar_local.size()) {
    throw std::invalid_argument("global mean: vector lengths disagree");
  }
  const double jm1 = static_cast<double>(j - 1);
  const double jd = static_cast<double>(j);
  std::vector<double> out(s_bar_local.size());
  for (size_t r = 0; r < out.size(); ++r) {
    const double t = round_to(prec, round_to(prec, jm1 * f_prev[r]) +
                                        s_bar_local[r]);
    out[r] = round_to(prec, t / jd);
  }
  return out;
}

CorrectionTerms correction_terms(const std::vector<double>& f_prev,
                                 const std::vector<double>& f_new,
                                 const std::vector<double>& s_bar_local,
                                 double beta, Prec prec) {
  if (beta == 1.0) {
    throw std::invalid_argument(
        "correction terms: beta == 1 makes the recovery factor singular");
  }
  const double inva = beta / (1.0 - beta);
  CorrectionTerms ct;
  ct.dm_prev.resize(f_new.size());
  ct.dm_cur.resize(f_new.size());
  for (size_t r = 0; r < f_new.size(); ++r) {
    ct.dm_prev[r] = round_to(prec, inva * round_to(prec, f_prev[r] - f_new[r]));
    ct.dm_cur[r] =
        round_to(prec, inva * round_to(prec, s_bar_local[r] - f_new[r]));
  }
  return ct;
}

PasaParams PasaParams::make(size_t s2, double beta, double alpha, Prec prec) {
  if (beta < 0.0 || beta >= 1.0) {
    throw std::invalid_argument(
        "pasa params: beta must lie in [0, 1); beta == 1 has no recovery");
  }
  PasaParams p;
  p.beta = beta;
  p.alpha = alpha;
  p.s2 = s2;
  p.m = build_shifting_matrix(s2, beta, alpha, prec);
  return p;
}

OnlineState::OnlineState(size_t s1, size_t dim, Prec vec_prec)
    : vec_(vec_prec),
      m_(s1, 0.0),
      l_(s1, 0.0),
      f_bar_(s1, 0.0),
      o_acc_(Matrix2D::zeros(s1, dim, vec_prec)) {}

void OnlineState::absorb(const Matrix2D& s_shifted, const Matrix2D& v_block,
                         double beta, const PrecisionPolicy& policy) {
  const size_t s1 = m_.size();
  if (s_shifted.rows != s1 || v_block.rows != s_shifted.cols ||
      v_block.cols != o_acc_.cols) {
    throw std::invalid_argument("online state: block shapes disagree");
  }
  const Prec vec = vec_;
  ++j_;
  const size_t j = j_;

  const std::vector<double> mloc = rowmax(s_shifted);
  const Matrix2D p = exp_elementwise(s_shifted, mloc, vec);
  const std::vector<double> lloc = rowsum(p, vec);
  const std::vector<double> sbar = rowmean(s_shifted, vec);
  const std::vector<double> f_new =
      recover_global_mean(f_bar_, sbar, j, vec);
  // For the first block the history side has no meaning: F_bar == S_bar makes
  // the current correction exactly zero and the previous terms are skipped.
  const CorrectionTerms ct =
      correction_terms(j == 1 ? f_new : f_bar_, f_new, sbar, beta, vec);

  std::vector<double> mnew(s1);
  for (size_t r = 0; r < s1; ++r) {
    const double cand_cur = round_to(vec, mloc[r] + ct.dm_cur[r]);
    if (j == 1) {
      mnew[r] = cand_cur;
    } else {
      const double cand_prev = round_to(vec, m_[r] + ct.dm_prev[r]);
      mnew[r] = detail::nan_max(cand_prev, cand_cur);
    }
  }

  std::vector<double> e_cur(s1), e_prev(s1, 0.0);
  for (size_t r = 0; r < s1; ++r) {
    const double dm_cur_full =
        round_to(vec, round_to(vec, mloc[r] - mnew[r]) + ct.dm_cur[r]);
    e_cur[r] = exp_at(vec, dm_cur_full);
    if (j > 1) {
      const double dm_prev_full =
          round_to(vec, round_to(vec, m_[r] - mnew[r]) + ct.dm_prev[r]);
      e_prev[r] = exp_at(vec, dm_prev_full);
    }
  }

  for (size_t r = 0; r < s1; ++r) {
    const double cur = round_to(vec, e_cur[r] * lloc[r]);
    l_[r] = j == 1 ? cur
                   : round_to(vec, round_to(vec, e_prev[r] * l_[r]) + cur);
  }

  const Matrix2D ot = gemm(p, v_block, false, policy);
  for (size_t r = 0; r < s1; ++r) {
    double* orow = o_acc_.row(r);
    const double* trow = ot.row(r);
    for (size_t c = 0; c < o_acc_.cols; ++c) {
      const double cur = round_to(vec, e_cur[r] * trow[c]);
      orow[c] = j == 1
                    ? cur
                    : round_to(vec, cur + round_to(vec, e_prev[r] * orow[c]));
    }
  }

  m_ = std::move(mnew);
  f_bar_ = f_new;
}

Matrix2D OnlineState::finalize() const {
  Matrix2D out(o_acc_.rows, o_acc_.cols, vec_);
  for (size_t r = 0; r < out.rows; ++r) {
    const double* src = o_acc_.row(r);
    double* dst = out.row(r);
    for (size_t c = 0; c < out.cols; ++c) {
      dst[c] = round_to(vec_, src[c] / l_[r]);
    }
  }
  return out;
}

Tensor4D pasa_attention(const AttentionProblem& problem,
                        const PasaParams& params,
                        const PrecisionPolicy& policy,
                        const AttnOptions& opts, RunDiagnostics* diag) {
  if (params.s2 != problem.s2) {
    throw std::invalid_argument("pasa: params.s2 does not match the problem");
  }
  if (params.m.rows != params.s2 || params.m.cols != params.s2) {
    throw std::invalid_argument("pasa: shifting matrix has the wrong shape");
  }
  if (params.alpha != problem.alpha) {
    throw std::invalid_argument("pasa: params.alpha does not match sqrt(d)");
  }
  if (params.beta == 1.0) {
    throw std::invalid_argument("pasa: beta == 1 has no recovery");
  }
  if (params.beta == 0.0) {
    // Zero shift degrades exactly to the blocked attention pipeline,
    // including the scale-after-store rounding order.
    Tensor4D out = flash_attention(problem, policy, opts, diag);
    if (diag && diag->has_fp64_ranges) {
      diag->fp64_shifted_min = diag->fp64_unshifted_min;
      diag->fp64_shifted_max = diag->fp64_unshifted_max;
    }
    return out;
  }

  const Tensor4D& q = problem.q;
  const size_t s1 = problem.s1;
  const size_t s2 = problem.s2;
  const size_t nq = problem.q_blocks();
  const size_t nkv = problem.kv_blocks();
  const double alpha = problem.alpha;
  const Prec vec = policy.vector_prec;

  // Key preprocessing, one batched GEMM per (batch, head, j).
  const size_t kv_slices = q.batch * q.heads * nkv;
  std::vector<Matrix2D> kp(kv_slices);
  parallel_for(kv_slices, opts.threads, [&](size_t idx) {
    const size_t b = idx / (q.heads * nkv);
    const size_t h = (idx / nkv) % q.heads;
    const size_t j = idx % nkv;
    kp[idx] = preprocess_keys(problem.k.slice(b, h, j * s2, s2), params.m,
                              policy);
  });

  Tensor4D out(q.batch, q.heads, q.seq, q.dim, vec);
  const size_t slices = q.batch * q.heads * nq;
  std::vector<RunDiagnostics> slice_diag(diag ? slices : 0);

  parallel_for(slices, opts.threads, [&](size_t idx) {
    const size_t b = idx / (q.heads * nq);
    const size_t h = (idx / nq) % q.heads;
    const size_t i = idx % nq;
    RunDiagnostics* sd = diag ? &slice_diag[idx] : nullptr;

    const Matrix2D qi = q.slice(b, h, i * s1, s1);
    OnlineState state(s1, q.dim, vec);
    for (size_t j = 0; j < nkv; ++j) {
      const Matrix2D& kpj = kp[(b * q.heads + h) * nkv + j];
      const Matrix2D s_shifted = gemm(qi, kpj, false, policy);
      if (sd) {
        detail::track_store(s_shifted, *sd);
        if (opts.diagnose) {
          const Matrix2D kj = problem.k.slice(b, h, j * s2, s2);
          Matrix2D s64 = gemm(qi, kj, true, kFp64Policy);
          for (double& x : s64.data) x /= alpha;
          detail::track_fp64_range(s64, sd->fp64_unshifted_min,
                                   sd->fp64_unshifted_max);
          const Matrix2D kp64 = preprocess_keys(kj, params.m, kFp64Policy);
          const Matrix2D s64s = gemm(qi, kp64, false, kFp64Policy);
          detail::track_fp64_range(s64s, sd->fp64_shifted_min,
                                   sd->fp64_shifted_max);
          sd->has_fp64_ranges = true;
        }
      }
      state.absorb(s_shifted, problem.v.slice(b, h, j * s2, s2), params.beta,
                   policy);
    }
    const Matrix2D oi = state.finalize();
    for (size_t r = 0; r < s1; ++r) {
      double* dst = &out.at(b, h, i * s1 + r, 0);
      const double* src = oi.row(r);
      for (size_t c = 0; c < q.dim; ++c) {
        dst[c] = src[c];
        if (sd) {
          ++sd->out_total;
          if (!std::isfinite(src[c])) ++sd->out_nonfinite;
        }
      }
    }
  });

  if (diag) {
    for (const RunDiagnostics& d : slice_diag) diag->merge(d);
  }
  return out;
}

}  // namespace pasa
