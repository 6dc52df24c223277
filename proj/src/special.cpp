#include "fracevo/special.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fracevo {

namespace {

constexpr double kTGammaOverflow = 170.6;  // Gamma(x) overflows above this

// Largest |z| whose powers stay representable during direct accumulation.
bool direct_term_in_range(double log_abs_z, int k, double x) {
  return x <= kTGammaOverflow && log_abs_z * k < 700.0;
}

}  // namespace

double reciprocal_gamma(double x) {
  if (x > 0.0) {
    if (x > kTGammaOverflow) return std::exp(-std::lgamma(x));
    return 1.0 / std::tgamma(x);
  }
  if (x == std::floor(x)) return 0.0;  // poles of Gamma
  return 1.0 / std::tgamma(x);
}

double g_kernel(double alpha, double t) {
  if (alpha < 0.0) throw ConfigError("g_kernel needs alpha >= 0");
  if (alpha == 0.0 || t <= 0.0) return 0.0;
  if (alpha <= kTGammaOverflow) {
    double p = std::pow(t, alpha - 1.0);
    if (std::isfinite(p)) return p / std::tgamma(alpha);
  }
  // Log-space fallback for extreme orders or powers.
  return std::exp((alpha - 1.0) * std::log(t) - std::lgamma(alpha));
}

double power_difference(double p, double h, int m) {
  if (m < 1) return 0.0;
  if (m == 1) return std::pow(h, p);
  // m^p - (m-1)^p = -m^p expm1(p log1p(-1/m)) keeps full precision.
  const double diff = -std::pow(static_cast<double>(m), p) *
                      std::expm1(p * std::log1p(-1.0 / m));
  return diff * std::pow(h, p);
}

double g_kernel_difference(double alpha, double h, int m) {
  if (alpha <= 0.0 || m < 1) return 0.0;
  return power_difference(alpha - 1.0, h, m) * reciprocal_gamma(alpha);
}

MLScalarResult ml_scalar_detailed(MLParams params, double z,
                                  const MLControl& ctl) {
  if (std::abs(z) > ctl.max_abs_argument) {
    std::ostringstream os;
    os << "Mittag-Leffler argument " << z << " outside admissible range |z| <= "
       << ctl.max_abs_argument;
    throw NonConvergence(os.str());
  }

  // Extended-precision accumulation: the degeneration identities demand
  // absolute accuracy near machine level even when the alternating terms
  // reach 1e4 (E_1 at z = 10, E_2 at z = -100).
  MLScalarResult res;
  long double sum = 0.0L;
  long double abs_sum = 0.0L;
  long double prev_mag = std::numeric_limits<long double>::infinity();
  int settled = 0;

  const double log_abs_z = z == 0.0 ? 0.0 : std::log(std::abs(z));
  long double power = 1.0L;  // z^k while in range

  for (int k = 0; k < ctl.max_terms; ++k) {
    const double x = params.alpha * k + params.beta;
    long double term;
    if (direct_term_in_range(log_abs_z, k, x)) {
      if (x > 0.0 && x <= kTGammaOverflow) {
        term = power / std::tgammal(static_cast<long double>(x));
      } else {
        term = power * static_cast<long double>(reciprocal_gamma(x));
      }
      power *= z;
    } else {
      const long double mag =
          std::exp(k * static_cast<long double>(log_abs_z) -
                   std::lgamma(static_cast<long double>(x)));
      term = (z < 0.0 && (k % 2 != 0)) ? -mag : mag;
    }

    sum += term;
    abs_sum += std::abs(static_cast<double>(term));

    const long double mag = term < 0.0L ? -term : term;
    if (static_cast<double>(mag) <=
            ctl.tol * (1.0 + std::abs(static_cast<double>(sum))) &&
        mag <= prev_mag) {
      if (++settled >= 3) {
        res.value = static_cast<double>(sum);
        res.terms = k + 1;
        res.truncation_bound = static_cast<double>(mag);
        res.rounding_bound = static_cast<double>(abs_sum) *
                             std::numeric_limits<double>::epsilon();
        return res;
      }
    } else {
      settled = 0;
    }
    prev_mag = mag;

    if (z == 0.0) {  // only k = 0 contributes
      res.value = static_cast<double>(sum);
      res.terms = 1;
      res.rounding_bound = std::numeric_limits<double>::epsilon();
      return res;
    }
  }

  std::ostringstream os;
  os << "Mittag-Leffler series E_{" << params.alpha << "," << params.beta
     << "}(" << z << ") did not settle within " << ctl.max_terms << " terms";
  throw NonConvergence(os.str());
}

double ml_scalar(MLParams params, double z, const MLControl& ctl) {
  return ml_scalar_detailed(params, z, ctl).value;
}

Matrix ml_matrix(MLParams params, const Matrix& M, double scale,
                 const MLControl& ctl) {
  if (M.rows() != M.cols()) {
    throw DimensionMismatch("ml_matrix needs a square matrix");
  }
  if (!(scale >= 0.0)) throw ConfigError("ml_matrix needs scale >= 0");

  const Eigen::Index n = M.rows();
  const Matrix Ms = M * scale;
  const double arg_norm = Ms.norm();  // Frobenius, dominates the spectral norm
  if (arg_norm > ctl.max_abs_argument) {
    std::ostringstream os;
    os << "matrix Mittag-Leffler argument norm " << arg_norm
       << " outside admissible range " << ctl.max_abs_argument;
    throw NonConvergence(os.str());
  }

  Matrix sum = Matrix::Zero(n, n);
  Matrix power = Matrix::Identity(n, n);
  double log_rescale = 0.0;  // power holds (Ms)^k / exp(log_rescale)
  double prev_mag = std::numeric_limits<double>::infinity();
  int settled = 0;

  for (int k = 0; k < ctl.max_terms; ++k) {
    const double x = params.alpha * k + params.beta;
    double coeff;
    if (x <= kTGammaOverflow) {
      // Rescaling only kicks in at large k, where x is already huge, so the
      // tgamma path and the rescale factor never need to mix signs.
      coeff = reciprocal_gamma(x) * std::exp(log_rescale);
    } else {
      coeff = std::exp(log_rescale - std::lgamma(x));
    }
    sum.noalias() += power * coeff;

    const double mag = power.norm() * std::abs(coeff);
    if (mag <= ctl.tol * (1.0 + sum.norm()) && mag <= prev_mag) {
      if (++settled >= 3) return sum;
    } else {
      settled = 0;
    }
    prev_mag = mag;

    power = power * Ms;
    const double pn = power.norm();
    if (pn > 1e100) {  // renormalize to dodge overflow of matrix powers
      power /= pn;
      log_rescale += std::log(pn);
    }
    if (pn == 0.0) return sum;  // nilpotent argument, series terminated
  }

  std::ostringstream os;
  os << "matrix Mittag-Leffler series (alpha=" << params.alpha
     << ", beta=" << params.beta << ", ||arg||=" << arg_norm
     << ") did not settle within " << ctl.max_terms << " terms";
  throw NonConvergence(os.str());
}

}  // namespace fracevo
