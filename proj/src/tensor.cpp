// SPDX-License-Identifier: Apache-2.0

#include "pasa/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace pasa {

Matrix2D Tensor4D::slice(size_t b, size_t h, size_t row0, size_t nrows) const {
  Matrix2D m(nrows, dim, tag);
  const double* src = data.data() + offset(b, h, row0, 0);
  std::memcpy(m.data.data(), src, nrows * dim * sizeof(double));
  return m;
}

AttentionProblem make_problem(Tensor4D q, Tensor4D k, Tensor4D v, size_t s1,
                              size_t s2) {
  if (q.dim == 0 || q.batch == 0 || q.heads == 0 || q.seq == 0) {
    throw std::invalid_argument("problem: empty query tensor");
  }
  if (k.batch != q.batch || k.heads != q.heads || k.dim != q.dim) {
    throw std::invalid_argument("problem: K shape does not match Q");
  }
  if (v.batch != k.batch || v.heads != k.heads || v.dim != k.dim ||
      v.seq != k.seq) {
    throw std::invalid_argument("problem: V shape does not match K");
  }
  if (s1 == 0 || s2 == 0 || q.seq % s1 != 0 || k.seq % s2 != 0) {
    throw std::invalid_argument(
        "problem: sequence lengths must be nonzero multiples of the block "
        "sizes (S1=" +
        std::to_string(q.seq) + ", s1=" + std::to_string(s1) +
        ", S2=" + std::to_string(k.seq) + ", s2=" + std::to_string(s2) +
        "); ragged inputs are rejected, use truncation explicitly");
  }
  for (const Tensor4D* t : {&q, &k, &v}) {
    for (double x : t->data) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument(
            "problem: input tensors must be finite in the input precision");
      }
    }
  }
  AttentionProblem p;
  p.q = std::move(q);
  p.k = std::move(k);
  p.v = std::move(v);
  p.s1 = s1;
  p.s2 = s2;
  p.alpha = std::sqrt(static_cast<double>(p.q.dim));
  return p;
}

void truncate_to_multiple(Tensor4D& t, size_t block) {
  if (block == 0) return;
  const size_t keep = (t.seq / block) * block;
  if (keep == t.seq) return;
  Tensor4D out(t.batch, t.heads, keep, t.dim, t.tag);
  for (size_t b = 0; b < t.batch; ++b)
    for (size_t h = 0; h < t.heads; ++h)
      std::memcpy(out.data.data() + out.offset(b, h, 0, 0),
                  t.data.data() + t.offset(b, h, 0, 0),
                  keep * t.dim * sizeof(double));
  t = std::move(out);
}

}  // namespace pasa
