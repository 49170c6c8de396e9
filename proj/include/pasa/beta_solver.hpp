// SPDX-License-Identifier: Apache-2.0
//
// Optimal-accuracy condition for the shift fraction beta: the ideal recovery
// factor beta/(1-beta) must equal the factor implied by the binary16-rounded
// shifting-matrix entries. Solved by fixed-point iteration at FP64.

#pragma once

#include <cstddef>
#include <stdexcept>

namespace pasa {

struct SolverDivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvarianceReport {
  double beta = 0.0;
  size_t n = 0;             // shifting-matrix size (the KV block size)
  double a = 0.0;           // fl16(1 - beta/n) + b
  double b = 0.0;           // fl16(beta/n)
  double inva_ideal = 0.0;  // beta/(1-beta)
  double inva_actual = 0.0; // b*n/(a*(a-b*n)) + (1-a)/a
  double rel_err = 0.0;     // |ideal - actual| / |ideal|
};

/// Evaluate the rounded invariance at FP64 with exactly two binary16
/// roundings. Throws SingularMatrixError-style domain_error when a == b*n.
InvarianceReport invariance_parameter(double beta, size_t n);

struct BetaSolution {
  double beta_star = 0.0;
  size_t iterations = 0;
  InvarianceReport report;  // invariance at the solved beta
};

/// Fixed-point iteration beta <- f(beta)/(1 + f(beta)) until the relative
/// change drops to tol. Throws SolverDivergenceError after 10000 iterations.
BetaSolution optimal_beta(double beta0, size_t n, double tol = 1e-8);

}  // namespace pasa
