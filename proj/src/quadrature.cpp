#include "fracevo/quadrature.hpp"

#include <cmath>

namespace fracevo {

ProductRule::ProductRule(double mu, const TimeGrid& grid)
    : mu_(mu), h_(grid.dt()) {
  if (!(mu > 0.0)) throw ConfigError("product rule needs weight order mu > 0");
  const int N = grid.steps();
  low_.assign(N + 1, 0.0);
  high_.assign(N + 1, 0.0);
  for (int m = 1; m <= N; ++m) {
    // A0 = int u^{mu-1}, A1 = int u^mu over the cell.
    const double a0 = power_difference(mu_, h_, m) / mu_;
    const double a1 = power_difference(mu_ + 1.0, h_, m) / (mu_ + 1.0);
    low_[m] = m * a0 - a1 / h_;
    high_[m] = (1.0 - m) * a0 + a1 / h_;
  }
}

template <class Value>
std::vector<Value> kernel_convolution(const ProductRule& rule,
                                      const std::vector<Matrix>& kernel,
                                      const std::vector<Value>& phi) {
  const int N = static_cast<int>(phi.size()) - 1;
  if (static_cast<int>(kernel.size()) < N + 1) {
    throw DimensionMismatch("kernel table shorter than the trajectory");
  }
  std::vector<Value> out;
  out.reserve(N + 1);
  out.push_back(zero_like(phi[0]));
  for (int i = 1; i <= N; ++i) {
    Value acc = zero_like(phi[0]);
    for (int j = 0; j < i; ++j) {
      const int m = i - j;
      // Psi at s=t_j sits at the high edge u=mh of the cell, Psi at s=t_{j+1}
      // at the low edge u=(m-1)h.
      acc += rule.high_weight(m) * (kernel[m] * phi[j]);
      acc += rule.low_weight(m) * (kernel[m - 1] * phi[j + 1]);
    }
    out.push_back(std::move(acc));
  }
  return out;
}

template std::vector<Vector> kernel_convolution(const ProductRule&,
                                                const std::vector<Matrix>&,
                                                const std::vector<Vector>&);
template std::vector<Matrix> kernel_convolution(const ProductRule&,
                                                const std::vector<Matrix>&,
                                                const std::vector<Matrix>&);

template <class Value>
std::vector<Value> fractional_integral(double mu, const std::vector<Value>& phi,
                                       const TimeGrid& grid) {
  if (static_cast<int>(phi.size()) != grid.nodes()) {
    throw DimensionMismatch("fractional_integral needs one sample per node");
  }
  const ProductRule rule(mu, grid);
  const double norm = reciprocal_gamma(mu);  // convolve against g_mu proper
  const int N = grid.steps();
  std::vector<Value> out;
  out.reserve(N + 1);
  out.push_back(zero_like(phi[0]));
  for (int i = 1; i <= N; ++i) {
    Value acc = zero_like(phi[0]);
    for (int j = 0; j < i; ++j) {
      const int m = i - j;
      acc += rule.high_weight(m) * phi[j];
      acc += rule.low_weight(m) * phi[j + 1];
    }
    acc *= norm;
    out.push_back(std::move(acc));
  }
  return out;
}

template std::vector<double> fractional_integral(double,
                                                 const std::vector<double>&,
                                                 const TimeGrid&);
template std::vector<Vector> fractional_integral(double,
                                                 const std::vector<Vector>&,
                                                 const TimeGrid&);
template std::vector<Matrix> fractional_integral(double,
                                                 const std::vector<Matrix>&,
                                                 const TimeGrid&);

std::vector<double> g_convolution(double alpha, double beta,
                                  const TimeGrid& grid) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw ConfigError("g_convolution needs alpha, beta > 0");
  }
  const int N = grid.steps();
  const double h = grid.dt();
  const ProductRule rule_a(alpha, grid);  // weight in u = t_i - s
  const ProductRule rule_b(beta, grid);   // weight in s
  const double rga = reciprocal_gamma(alpha);
  const double rgb = reciprocal_gamma(beta);

  std::vector<double> out(N + 1, 0.0);
  for (int i = 1; i <= N; ++i) {
    if (i == 1) {
      // Both singularities share the cell: exact Beta moment.
      out[1] = std::pow(h, alpha + beta - 1.0) *
               std::exp(-std::lgamma(alpha + beta));
      continue;
    }
    const int mid = i / 2;
    double acc = 0.0;
    for (int j = 0; j < mid; ++j) {
      // s-side weight s^{beta-1}/Gamma(beta); interpolate g_alpha(t_i - s).
      const double lo = g_kernel(alpha, (i - j) * h);      // s = t_j
      const double hi = g_kernel(alpha, (i - j - 1) * h);  // s = t_{j+1}
      acc += rgb * (rule_b.low_weight(j + 1) * lo +
                    rule_b.high_weight(j + 1) * hi);
    }
    for (int j = mid; j < i; ++j) {
      // u-side weight (t_i-s)^{alpha-1}/Gamma(alpha); interpolate g_beta(s).
      const int m = i - j;
      acc += rga * (rule_a.high_weight(m) * g_kernel(beta, j * h) +
                    rule_a.low_weight(m) * g_kernel(beta, (j + 1) * h));
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace fracevo
