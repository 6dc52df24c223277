#include "fracevo/families.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace fracevo {

double operator_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  return A.jacobiSvd().singularValues()(0);
}

double spectral_abscissa(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

Matrix cosine_family(FractionalOrder alpha, const Matrix& A, double t,
                     const MLControl& ctl) {
  if (t < 0.0) throw ConfigError("family time must be nonnegative");
  return ml_matrix({alpha.value(), 1.0}, A, std::pow(t, alpha.value()), ctl);
}

Matrix sine_family(FractionalOrder alpha, const Matrix& A, double t,
                   const MLControl& ctl) {
  if (t < 0.0) throw ConfigError("family time must be nonnegative");
  if (t == 0.0) return Matrix::Zero(A.rows(), A.cols());
  return t * ml_matrix({alpha.value(), 2.0}, A, std::pow(t, alpha.value()), ctl);
}

Matrix rl_family(FractionalOrder alpha, const Matrix& A, double t,
                 const MLControl& ctl) {
  if (t < 0.0) throw ConfigError("family time must be nonnegative");
  if (t == 0.0) return Matrix::Zero(A.rows(), A.cols());
  const double a = alpha.value();
  return std::pow(t, a - 1.0) * ml_matrix({a, a}, A, std::pow(t, a), ctl);
}

Matrix rl_family_derivative(FractionalOrder alpha, const Matrix& A, double t,
                            const MLControl& ctl) {
  if (!(t > 0.0)) {
    throw ConfigError("rl_family_derivative needs t > 0; the kernel is "
                      "singular at the origin for alpha < 2");
  }
  const double a = alpha.value();
  return std::pow(t, a - 2.0) * ml_matrix({a, a - 1.0}, A, std::pow(t, a), ctl);
}

GrowthEnvelope estimate_envelope(FractionalOrder alpha, const Matrix& A,
                                 const TimeGrid& grid, const MLControl& ctl) {
  GrowthEnvelope env;
  const double sabs = spectral_abscissa(A);
  // E_alpha(lambda t^alpha) grows like exp(lambda^{1/alpha} t) for lambda > 0;
  // for a spectrum in the closed left half plane no exponential rate is
  // needed, the polynomial factors get absorbed into M on a finite horizon.
  env.omega = sabs > 0.0 ? std::pow(sabs, 1.0 / alpha.value()) : 0.0;
  double peak = 1.0;
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    const double norm = operator_norm(cosine_family(alpha, A, t, ctl));
    peak = std::max(peak, norm * std::exp(-env.omega * t));
  }
  env.M = peak;
  return env;
}

bool envelope_certified(const GrowthEnvelope& env, FractionalOrder alpha,
                        const Matrix& A, const TimeGrid& grid,
                        const MLControl& ctl) {
  if (env.M < 1.0 || env.omega < 0.0) return false;
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    const double norm = operator_norm(cosine_family(alpha, A, t, ctl));
    if (norm > env.M * std::exp(env.omega * t) * (1.0 + 1e-12)) return false;
  }
  return true;
}

}  // namespace fracevo
