// SPDX-License-Identifier: Apache-2.0

#include "pasa/attention.hpp"

#include <algorithm>
#include <cmath>

#include "pasa/parallel.hpp"

namespace pasa {

namespace {
const PrecisionPolicy kFp64Policy = policy_for(PolicyId::GoldenFp64);
}  // namespace

namespace detail {

double nan_max(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return a > b ? a : b;
}

void track_store(const Matrix2D& s, RunDiagnostics& d) {
  for (double v : s.data) {
    if (std::isnan(v)) {
      ++d.store_nan;
    } else if (std::isinf(v)) {
      v > 0 ? ++d.store_pos_inf : ++d.store_neg_inf;
    } else {
      d.store_finite_min = std::min(d.store_finite_min, v);
      d.store_finite_max = std::max(d.store_finite_max, v);
    }
  }
}

void track_fp64_range(const Matrix2D& s, double& lo, double& hi) {
  for (double v : s.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
}

}  // namespace detail

using detail::nan_max;
using detail::track_fp64_range;
using detail::track_store;

void RunDiagnostics::merge(const RunDiagnostics& o) {
  store_finite_min = std::min(store_finite_min, o.store_finite_min);
  store_finite_max = std::max(store_finite_max, o.store_finite_max);
  store_pos_inf += o.store_pos_inf;
  store_neg_inf += o.store_neg_inf;
  store_nan += o.store_nan;
  out_nonfinite += o.out_nonfinite;
  out_total += o.out_total;
  has_fp64_ranges = has_fp64_ranges || o.has_fp64_ranges;
  fp64_unshifted_min = std::min(fp64_unshifted_min, o.fp64_unshifted_min);
  fp64_unshifted_max = std::max(fp64_unshifted_max, o.fp64_unshifted_max);
  fp64_shifted_min = std::min(fp64_shifted_min, o.fp64_shifted_min);
  fp64_shifted_max = std::max(fp64_shifted_max, o.fp64_shifted_max);
}

Tensor4D golden_attention(const AttentionProblem& problem, int threads) {
  const Tensor4D& q = problem.q;
  Tensor4D out(q.batch, q.heads, q.seq, q.dim, Prec::FP64);
  const double alpha = problem.alpha;
  parallel_for(q.batch * q.heads, threads, [&](size_t bh) {
    const size_t b = bh / q.heads;
    const size_t h = bh % q.heads;
    const Matrix2D qm = q.slice(b, h, 0, q.seq);
    const Matrix2D km = problem.k.slice(b, h, 0, problem.k.seq);
    const Matrix2D vm = problem.v.slice(b, h, 0, problem.v.seq);
    Matrix2D s = gemm(qm, km, true, kFp64Policy);
    for (double& x : s.data) x /= alpha;
    const std::vector<double> m = rowmax(s);
    Matrix2D p = exp_elementwise(s, m, Prec::FP64);
    const std::vector<double> l = rowsum(p, Prec::FP64);
    for (size_t r = 0; r < p.rows; ++r) {
      double* pr = p.row(r);
      for (size_t c = 0; c < p.cols; ++c) pr[c] /= l[r];
    }
    const Matrix2D o = gemm(p, vm, false, kFp64Policy);
    std::copy(o.data.begin(), o.data.end(),
              out.data.begin() + out.offset(b, h, 0, 0));
  });
  return out;
}

Tensor4D flash_attention(const AttentionProblem& problem,
                         const PrecisionPolicy& policy,
                         const AttnOptions& opts, RunDiagnostics* diag) {
  const Tensor4D& q = problem.q;
  const size_t s1 = problem.s1;
  const size_t s2 = problem.s2;
  const size_t nq = problem.q_blocks();
  const size_t nkv = problem.kv_blocks();
  const double alpha = problem.alpha;
  const Prec vec = policy.vector_prec;
  const double m0 = opts.m0 == M0Mode::NegInf
                        ? -std::numeric_limits<double>::infinity()
                        : 0.0;

  Tensor4D out(q.batch, q.heads, q.seq, q.dim, vec);
  const size_t slices = q.batch * q.heads * nq;
  std::vector<RunDiagnostics> slice_diag(diag ? slices : 0);

  parallel_for(slices, opts.threads, [&](size_t idx) {
    const size_t b = idx / (q.heads * nq);
    const size_t h = (idx / nq) % q.heads;
    const size_t i = idx % nq;
    RunDiagnostics* sd = diag ? &slice_diag[idx] : nullptr;

    const Matrix2D qi = q.slice(b, h, i * s1, s1);
    std::vector<double> m(s1, m0);
    std::vector<double> l(s1, 0.0);
    Matrix2D oacc = Matrix2D::zeros(s1, q.dim, vec);

    for (size_t j = 0; j < nkv; ++j) {
      const Matrix2D kj = problem.k.slice(b, h, j * s2, s2);
      Matrix2D s = gemm(qi, kj, true, policy);
      if (sd) {
        track_store(s, *sd);
        if (opts.diagnose) {
          Matrix2D s64 = gemm(qi, kj, true, kFp64Policy);
          for (double& x : s64.data) x /= alpha;
          track_fp64_range(s64, sd->fp64_unshifted_min,
                           sd->fp64_unshifted_max);
          sd->has_fp64_ranges = true;
        }
      }
      // Static scaling happens after the store rounding; this ordering is
      // what exposes pre-scale magnitudes to the FP16 overflow boundary.
      for (double& x : s.data) x = round_to(vec, x / alpha);

      const std::vector<double> mloc = rowmax(s);
      std::vector<double> mnew(s1);
      for (size_t r = 0; r < s1; ++r) mnew[r] = nan_max(m[r], mloc[r]);

      const Matrix2D p = exp_elementwise(s, mnew, vec);
      const std::vector<double> lloc = rowsum(p, vec);
      std::vector<double> factor(s1);
      for (size_t r = 0; r < s1; ++r) {
        factor[r] = exp_at(vec, round_to(vec, m[r] - mnew[r]));
        l[r] = round_to(vec, round_to(vec, factor[r] * l[r]) + lloc[r]);
      }

      const Matrix2D vj = problem.v.slice(b, h, j * s2, s2);
      const Matrix2D ot = gemm(p, vj, false, policy);
      for (size_t r = 0; r < s1; ++r) {
        double* orow = oacc.row(r);
        const double* trow = ot.row(r);
        for (size_t c = 0; c < q.dim; ++c) {
          orow[c] =
              round_to(vec, round_to(vec, factor[r] * orow[c]) + trow[c]);
        }
      }
      m = mnew;
    }

    for (size_t r = 0; r < s1; ++r) {
      double* dst = &out.at(b, h, i * s1 + r, 0);
      const double* orow = oacc.row(r);
      for (size_t c = 0; c < q.dim; ++c) {
        dst[c] = round_to(vec, orow[c] / l[r]);
        if (sd) {
          ++sd->out_total;
          if (!std::isfinite(dst[c])) ++sd->out_nonfinite;
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
