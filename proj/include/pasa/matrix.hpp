// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrix with a semantic precision tag, plus the small kernel
// set (GEMM, row reductions, elementwise exp) with explicit rounding points.

#pragma once

#include <cstddef>
#include <vector>

#include "pasa/precision.hpp"

namespace pasa {

struct Matrix2D {
  size_t rows = 0;
  size_t cols = 0;
  Prec tag = Prec::FP64;
  std::vector<double> data;  // rows * cols, row-major

  Matrix2D() = default;
  Matrix2D(size_t r, size_t c, Prec t)
      : rows(r), cols(c), tag(t), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
  const double* row(size_t r) const { return data.data() + r * cols; }
  double* row(size_t r) { return data.data() + r * cols; }

  static Matrix2D zeros(size_t r, size_t c, Prec t = Prec::FP64) {
    return Matrix2D(r, c, t);
  }
  static Matrix2D identity(size_t n, Prec t = Prec::FP64);
};

/// Exact transpose (pure data movement, no rounding).
Matrix2D transpose(const Matrix2D& a);

/// True if every element re-rounds to itself at the matrix's tag.
bool tag_consistent(const Matrix2D& a);

/// C = A * B (or A * B^T when transpose_b). Each output element is the dot
/// product accumulated sequentially in ascending inner index, every multiply
/// and add individually rounded at policy.gemm_accum, then one rounding to
/// policy.gemm_store. Throws std::invalid_argument on dimension mismatch.
Matrix2D gemm(const Matrix2D& a, const Matrix2D& b, bool transpose_b,
              const PrecisionPolicy& policy);

/// Exact per-row maximum. A NaN anywhere in a row poisons that row's result.
std::vector<double> rowmax(const Matrix2D& a);

/// Left-to-right per-row sum with per-add rounding at prec.
std::vector<double> rowsum(const Matrix2D& a, Prec prec);

/// rowsum followed by one rounded division by the column count.
std::vector<double> rowmean(const Matrix2D& a, Prec prec);

/// out[r][c] = round(exp(round(a[r][c] - shift[r]))) at prec.
Matrix2D exp_elementwise(const Matrix2D& a, const std::vector<double>& shift,
                         Prec prec);

}  // namespace pasa
