#pragma once

#include "fracevo/types.hpp"

namespace fracevo {

// 1/Gamma(x) extended by 0 at the poles x = 0, -1, -2, ... and evaluated
// through the log-gamma once tgamma would overflow.
double reciprocal_gamma(double x);

// Convolution kernel g_alpha(t) = t^{alpha-1}/Gamma(alpha) for t > 0, with
// g_alpha(t) = 0 for t <= 0 and g_0 identically 0.
double g_kernel(double alpha, double t);

// Stable evaluation of g_alpha(m h) - g_alpha((m-1) h) for m >= 1; adjacent
// powers cancel badly for large m if subtracted directly.
double g_kernel_difference(double alpha, double h, int m);

// (m h)^p - ((m-1) h)^p for m >= 1, same cancellation-aware evaluation.
double power_difference(double p, double h, int m);

struct MLControl {
  double tol = 1e-13;
  int max_terms = 512;
  // Arguments beyond this magnitude are rejected instead of evaluated with
  // silently degraded precision; asymptotic expansions are out of scope.
  double max_abs_argument = 150.0;
};

struct MLScalarResult {
  double value = 0.0;
  int terms = 0;
  // First neglected term magnitude; the series terms are certified to be
  // non-increasing once the stopping rule fires.
  double truncation_bound = 0.0;
  // eps * sum_k |term_k|, the cancellation-aware rounding estimate.
  double rounding_bound = 0.0;
};

// Two-parameter Mittag-Leffler function E_{alpha,beta}(z) by direct series
// summation.  Stops once |term| <= tol*(1+|sum|) has held with non-increasing
// term magnitudes for three consecutive indices; throws NonConvergence when
// the budget runs out or |z| exceeds the admissible range.
MLScalarResult ml_scalar_detailed(MLParams params, double z,
                                  const MLControl& ctl = {});
double ml_scalar(MLParams params, double z, const MLControl& ctl = {});

// Matrix argument version: sum_k (M*scale)^k / Gamma(k*alpha + beta), with
// the same stopping rule applied to Frobenius norms of the terms.  The series
// is summed directly on the matrix; no eigendecomposition, so defective
// matrices are handled exactly like diagonalizable ones.
Matrix ml_matrix(MLParams params, const Matrix& M, double scale,
                 const MLControl& ctl = {});

}  // namespace fracevo
