// SPDX-License-Identifier: Apache-2.0

#include "pasa/beta_solver.hpp"

#include <cmath>

#include "pasa/half.hpp"

namespace pasa {

InvarianceReport invariance_parameter(double beta, size_t n) {
  if (!(beta > 0.0) || !(beta < 1.0)) {
    throw std::invalid_argument("invariance: beta must lie in (0, 1)");
  }
  if (n == 0) throw std::invalid_argument("invariance: n must be >= 1");
  const double nd = static_cast<double>(n);
  InvarianceReport r;
  r.beta = beta;
  r.n = n;
  r.b = f16_round(beta / nd);
  r.a = f16_round(1.0 - beta / nd) + r.b;
  const double denom = r.a - r.b * nd;
  if (denom == 0.0) {
    throw std::domain_error("invariance: a - b*n == 0, factor is singular");
  }
  r.inva_actual = r.b * nd / (r.a * denom) + (1.0 - r.a) / r.a;
  r.inva_ideal = beta / (1.0 - beta);
  r.rel_err = std::fabs(r.inva_ideal - r.inva_actual) / std::fabs(r.inva_ideal);
  return r;
}

BetaSolution optimal_beta(double beta0, size_t n, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("optimal_beta: tol must be > 0");
  constexpr size_t kMaxIterations = 10000;
  double beta = beta0;
  for (size_t iter = 1; iter <= kMaxIterations; ++iter) {
    const InvarianceReport rep = invariance_parameter(beta, n);
    const double f = rep.inva_actual;
    const double next = f / (1.0 + f);
    const double err = std::fabs(next - beta) / std::fabs(beta);
    beta = next;
    if (err <= tol) {
      BetaSolution sol;
      sol.beta_star = beta;
      sol.iterations = iter;
      sol.report = invariance_parameter(beta, n);
      return sol;
    }
  }
  throw SolverDivergenceError(
      "optimal_beta: no convergence after 10000 iterations");
}

}  // namespace pasa
