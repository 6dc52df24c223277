#pragma once

#include <vector>

#include "fracevo/special.hpp"
#include "fracevo/types.hpp"

namespace fracevo {

inline double zero_like(double) { return 0.0; }
inline Vector zero_like(const Vector& v) { return Vector::Zero(v.size()); }
inline Matrix zero_like(const Matrix& m) {
  return Matrix::Zero(m.rows(), m.cols());
}

// Product-trapezoidal rule for the weakly singular weight u^{mu-1} (no Gamma
// normalization: the analytic kernel factors carry their own) on a uniform
// grid.  Per cell [(m-1)h, mh] the smooth factor is interpolated linearly and
// the weight moments are integrated in closed form, so the rule is exact
// whenever the smooth factor is piecewise linear.
class ProductRule {
 public:
  ProductRule(double mu, const TimeGrid& grid);

  double mu() const { return mu_; }
  double dt() const { return h_; }

  // Cell [(m-1)h, mh]:  integral ~ low_weight(m)*psi((m-1)h) +
  // high_weight(m)*psi(mh).
  double low_weight(int m) const { return low_[m]; }
  double high_weight(int m) const { return high_[m]; }

 private:
  double mu_;
  double h_;
  std::vector<double> low_, high_;
};

// Discrete convolution out_i = int_0^{t_i} w_mu(u) G(u) phi(t_i - u) du with
// the analytic kernel factor G tabulated at grid offsets (kernel[m] = G(mh))
// and G*phi linearly interpolated per cell.  out_0 = 0.
template <class Value>
std::vector<Value> kernel_convolution(const ProductRule& rule,
                                      const std::vector<Matrix>& kernel,
                                      const std::vector<Value>& phi);

// Riemann-Liouville integral I^mu of a sampled function, piecewise-linear in
// the samples (the G == I special case above).
template <class Value>
std::vector<Value> fractional_integral(double mu, const std::vector<Value>& phi,
                                       const TimeGrid& grid);

// Discrete (g_alpha * g_beta) on the grid for alpha, beta > 0.  Both factors
// are algebraically singular at opposite endpoints, so each cell uses the
// closed-form moments of its nearer singularity and interpolates the other
// factor; the single doubly-singular cell (node 1) gets the exact Beta
// moment.  Semigroup law makes the exact answer g_{alpha+beta}.
std::vector<double> g_convolution(double alpha, double beta,
                                  const TimeGrid& grid);

}  // namespace fracevo
