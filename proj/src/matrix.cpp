// SPDX-License-Identifier: Apache-2.0

#include "pasa/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace pasa {

namespace {

struct RoundFp64 {
  double operator()(double x) const noexcept { return x; }
};
struct RoundFp32 {
  double operator()(double x) const noexcept {
    return static_cast<double>(static_cast<float>(x));
  }
};
struct RoundFp16 {
  double operator()(double x) const noexcept { return f16_round(x); }
};

// Four independent accumulation chains per pass keep the serial per-element
// rounding contract while hiding the add/round latency.
template <class R>
void gemm_rows(const Matrix2D& a, const Matrix2D& b, bool transpose_b,
               Prec store, Matrix2D& c, R rnd) {
  const size_t m = a.rows;
  const size_t k = a.cols;
  const size_t n = c.cols;
  for (size_t r = 0; r < m; ++r) {
    const double* ar = a.row(r);
    size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
      if (transpose_b) {
        const double* b0 = b.row(j);
        const double* b1 = b.row(j + 1);
        const double* b2 = b.row(j + 2);
        const double* b3 = b.row(j + 3);
        for (size_t t = 0; t < k; ++t) {
          const double av = ar[t];
          acc0 = rnd(acc0 + rnd(av * b0[t]));
          acc1 = rnd(acc1 + rnd(av * b1[t]));
          acc2 = rnd(acc2 + rnd(av * b2[t]));
          acc3 = rnd(acc3 + rnd(av * b3[t]));
        }
      } else {
        for (size_t t = 0; t < k; ++t) {
          const double av = ar[t];
          const double* bt = b.row(t) + j;
          acc0 = rnd(acc0 + rnd(av * bt[0]));
          acc1 = rnd(acc1 + rnd(av * bt[1]));
          acc2 = rnd(acc2 + rnd(av * bt[2]));
          acc3 = rnd(acc3 + rnd(av * bt[3]));
        }
      }
      double* cr = c.row(r) + j;
      cr[0] = round_to(store, acc0);
      cr[1] = round_to(store, acc1);
      cr[2] = round_to(store, acc2);
      cr[3] = round_to(store, acc3);
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (size_t t = 0; t < k; ++t) {
        const double bv = transpose_b ? b.at(j, t) : b.at(t, j);
        acc = rnd(acc + rnd(ar[t] * bv));
      }
      c.at(r, j) = round_to(store, acc);
    }
  }
}

}  // namespace

Matrix2D Matrix2D::identity(size_t n, Prec t) {
  Matrix2D m(n, n, t);
  for (size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix2D transpose(const Matrix2D& a) {
  Matrix2D t(a.cols, a.rows, a.tag);
  for (size_t r = 0; r < a.rows; ++r)
    for (size_t c = 0; c < a.cols; ++c) t.at(c, r) = a.at(r, c);
  return t;
}

bool tag_consistent(const Matrix2D& a) {
  for (double v : a.data) {
    if (!representable_at(a.tag, v)) return false;
  }
  return true;
}

Matrix2D gemm(const Matrix2D& a, const Matrix2D& b, bool transpose_b,
              const PrecisionPolicy& policy) {
  const size_t inner_b = transpose_b ? b.cols : b.rows;
  const size_t n = transpose_b ? b.rows : b.cols;
  if (a.cols != inner_b) {
    throw std::invalid_argument("gemm: inner dimensions disagree");
  }
  Matrix2D c(a.rows, n, policy.gemm_store);
  switch (policy.gemm_accum) {
    case Prec::FP64:
      gemm_rows(a, b, transpose_b, policy.gemm_store, c, RoundFp64{});
      break;
    case Prec::FP32:
      gemm_rows(a, b, transpose_b, policy.gemm_store, c, RoundFp32{});
      break;
    case Prec::FP16:
      gemm_rows(a, b, transpose_b, policy.gemm_store, c, RoundFp16{});
      break;
  }
  return c;
}

std::vector<double> rowmax(const Matrix2D& a) {
  std::vector<double> out(a.rows);
  for (size_t r = 0; r < a.rows; ++r) {
    const double* p = a.row(r);
    double m = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < a.cols; ++c) {
      if (std::isnan(p[c])) {
        m = std::numeric_limits<double>::quiet_NaN();
        break;
      }
      if (p[c] > m) m = p[c];
    }
    out[r] = m;
  }
  return out;
}

std::vector<double> rowsum(const Matrix2D& a, Prec prec) {
  std::vector<double> out(a.rows);
  for (size_t r = 0; r < a.rows; ++r) {
    const double* p = a.row(r);
    double acc = 0.0;
    for (size_t c = 0; c < a.cols; ++c) acc = round_to(prec, acc + p[c]);
    out[r] = acc;
  }
  return out;
}

std::vector<double> rowmean(const Matrix2D& a, Prec prec) {
  std::vector<double> out = rowsum(a, prec);
  const auto cols = static_cast<double>(a.cols);
  for (double& v : out) v = round_to(prec, v / cols);
  return out;
}

Matrix2D exp_elementwise(const Matrix2D& a, const std::vector<double>& shift,
                         Prec prec) {
  if (shift.size() != a.rows) {
    throw std::invalid_argument("exp_elementwise: shift length != rows");
  }
  Matrix2D out(a.rows, a.cols, prec);
  for (size_t r = 0; r < a.rows; ++r) {
    const double* p = a.row(r);
    double* q = out.row(r);
    for (size_t c = 0; c < a.cols; ++c) {
      q[c] = exp_at(prec, round_to(prec, p[c] - shift[r]));
    }
  }
  return out;
}

}  // namespace pasa
