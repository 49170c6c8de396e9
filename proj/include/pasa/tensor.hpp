// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "pasa/matrix.hpp"
#include "pasa/precision.hpp"

namespace pasa {

/// Dense (batch, heads, seq, dim) tensor, row-major in that order.
struct Tensor4D {
  size_t batch = 0;
  size_t heads = 0;
  size_t seq = 0;
  size_t dim = 0;
  Prec tag = Prec::FP64;
  std::vector<double> data;

  Tensor4D() = default;
  Tensor4D(size_t b, size_t h, size_t s, size_t d, Prec t)
      : batch(b), heads(h), seq(s), dim(d), tag(t), data(b * h * s * d, 0.0) {}

  size_t size() const { return data.size(); }
  size_t offset(size_t b, size_t h, size_t s, size_t d) const {
    return ((b * heads + h) * seq + s) * dim + d;
  }
  double& at(size_t b, size_t h, size_t s, size_t d) {
    return data[offset(b, h, s, d)];
  }
  double at(size_t b, size_t h, size_t s, size_t d) const {
    return data[offset(b, h, s, d)];
  }

  /// Copy rows [row0, row0+nrows) of one (batch, head) slice into a matrix.
  Matrix2D slice(size_t b, size_t h, size_t row0, size_t nrows) const;
};

/// Q (B,N,S1,d), K/V (B,N,S2,d) plus block sizes and the static scale sqrt(d).
struct AttentionProblem {
  Tensor4D q, k, v;
  size_t s1 = 0, s2 = 0;
  double alpha = 1.0;

  size_t seq_q() const { return q.seq; }
  size_t seq_kv() const { return k.seq; }
  size_t q_blocks() const { return q.seq / s1; }
  size_t kv_blocks() const { return k.seq / s2; }
};

/// Validates shapes, block divisibility and element finiteness; throws
/// std::invalid_argument with a descriptive message on violation.
AttentionProblem make_problem(Tensor4D q, Tensor4D k, Tensor4D v, size_t s1,
                              size_t s2);

/// Drop trailing rows so both sequence lengths are block multiples.
void truncate_to_multiple(Tensor4D& t, size_t block);

}  // namespace pasa
