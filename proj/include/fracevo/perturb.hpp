#pragma once

#include <optional>
#include <vector>

#include "fracevo/families.hpp"
#include "fracevo/quadrature.hpp"
#include "fracevo/time_dependent.hpp"
#include "fracevo/types.hpp"

namespace fracevo {

// E_{alpha,alpha}(A (m h)^alpha) for offsets m = 0..N: the analytic factor of
// the Duhamel kernel T_alpha(u;A) = u^{alpha-1} E_{alpha,alpha}(A u^alpha).
// One table serves every convolution on the grid.
std::vector<Matrix> duhamel_kernel_table(FractionalOrder alpha, const Matrix& A,
                                         const TimeGrid& grid,
                                         const MLControl& ctl = {});

// int_0^{t_i} T_alpha(t_i - s;A) phi(s) ds at every node, by the product rule
// (exact for piecewise-linear smooth factor against the u^{alpha-1} weight).
OperatorTrajectory singular_convolution(FractionalOrder alpha, const Matrix& A,
                                        const OperatorTrajectory& integrand,
                                        const MLControl& ctl = {});
VectorTrajectory singular_convolution(FractionalOrder alpha, const Matrix& A,
                                      const VectorTrajectory& integrand,
                                      const MLControl& ctl = {});

// n-th term of the perturbation series: the n-fold Duhamel iterate of B
// against the unperturbed cosine (resp. sine) family.
OperatorTrajectory series_term_cosine(int n, FractionalOrder alpha,
                                      const Matrix& A,
                                      const TimeDependentOperator& B,
                                      const TimeGrid& grid,
                                      const MLControl& ctl = {});
OperatorTrajectory series_term_sine(int n, FractionalOrder alpha,
                                    const Matrix& A,
                                    const TimeDependentOperator& B,
                                    const TimeGrid& grid,
                                    const MLControl& ctl = {});

enum class SeriesVariant { cosine, sine, particular };

// A-priori bound on the norm of series term n at time t:
//   cosine:     M^{n+1} K^n e^{omega t} g_{n alpha + 1}(t)
//   sine:       M^{n+1} K^n e^{omega t} g_{n alpha + 2}(t)
//   particular: M^{n+1} K^n N_t e^{omega t} g_{n alpha + alpha + 1}(t)
double tail_bound(int n, double t, FractionalOrder alpha,
                  const SeriesControl& ctl, SeriesVariant variant);

// Certified remainder sum_{n > after} tail_bound(n, t); drives truncation.
double tail_remainder(int after, double t, FractionalOrder alpha,
                      const SeriesControl& ctl, SeriesVariant variant);

// Populate K_t, N_t and (unless supplied) the growth envelope from grid
// samples.  The returned control certifies the envelope on the grid.
SeriesControl prepare_control(FractionalOrder alpha, const Matrix& A,
                              const TimeDependentOperator& B,
                              const ForcingTerm& f, const TimeGrid& grid,
                              double tol = 1e-12, int max_terms = 64,
                              std::optional<GrowthEnvelope> envelope = {},
                              const MLControl& ml = {});

template <class ValueType>
struct SeriesSum {
  Trajectory<ValueType> trajectory;
  int terms_used = 0;
  double certified_remainder = 0.0;
};

// Perturbed families C_alpha(.;A+B), S_alpha(.;A+B) summed until the
// certified remainder drops below ctl.tol; NonConvergence when max_terms is
// exhausted first.
SeriesSum<Matrix> perturbed_cosine(FractionalOrder alpha, const Matrix& A,
                                   const TimeDependentOperator& B,
                                   const TimeGrid& grid,
                                   const SeriesControl& ctl,
                                   const MLControl& ml = {});
SeriesSum<Matrix> perturbed_sine(FractionalOrder alpha, const Matrix& A,
                                 const TimeDependentOperator& B,
                                 const TimeGrid& grid, const SeriesControl& ctl,
                                 const MLControl& ml = {});

// Particular solution w = sum_n w_n with w_0 = T_alpha * f and
// w_n = T_alpha * (B w_{n-1}); w(0) = w'(0) = 0.
SeriesSum<Vector> particular_solution(FractionalOrder alpha, const Matrix& A,
                                      const TimeDependentOperator& B,
                                      const ForcingTerm& f,
                                      const TimeGrid& grid,
                                      const SeriesControl& ctl,
                                      const MLControl& ml = {});

// Constant-B closed form w = T_alpha(.;A+B) * f; agrees with the series
// construction within the combined tolerances.
VectorTrajectory variation_of_constants(FractionalOrder alpha, const Matrix& A,
                                        const Matrix& B_const,
                                        const ForcingTerm& f,
                                        const TimeGrid& grid,
                                        const SeriesControl& ctl,
                                        const MLControl& ml = {});

struct IvpSolution {
  VectorTrajectory trajectory;
  int cosine_terms = 0;
  int sine_terms = 0;
  int forcing_terms = 0;
  double cosine_remainder = 0.0;
  double sine_remainder = 0.0;
  double forcing_remainder = 0.0;
};

// u(t) = C_alpha(t;A+B) x + S_alpha(t;A+B) y + w(t); u(0) = x exactly.
IvpSolution solve_ivp(FractionalOrder alpha, const Matrix& A,
                      const TimeDependentOperator& B, const ForcingTerm& f,
                      const Vector& x, const Vector& y, const TimeGrid& grid,
                      const SeriesControl& ctl, const MLControl& ml = {});

// u_i = T_i x for an operator-valued trajectory.
VectorTrajectory apply_trajectory(const OperatorTrajectory& ops,
                                  const Vector& x);

struct BoundsRow {
  double t = 0.0;
  double norm_cos = 0.0, bound_cos = 0.0, margin_cos = 0.0;
  double norm_sin = 0.0, bound_sin = 0.0, margin_sin = 0.0;
  double norm_cos_diff = 0.0, bound_cos_diff = 0.0, margin_cos_diff = 0.0;
  double norm_sin_diff = 0.0, bound_sin_diff = 0.0, margin_sin_diff = 0.0;
};

struct BoundsReport {
  std::vector<BoundsRow> rows;
  double min_margin = 0.0;
  bool ok = false;
};

// Evaluates the four growth bounds (perturbed cosine, perturbed sine, and the
// two perturbation differences) at every node and reports the margins
// bound - norm.  The bounds hold as theorems, so a margin below -tol_numeric
// throws BoundViolation naming the offending nodes (disable to inspect the
// report instead).
BoundsReport verify_growth_bounds(FractionalOrder alpha, const Matrix& A,
                                  const TimeDependentOperator& B,
                                  const TimeGrid& grid,
                                  const SeriesControl& ctl,
                                  double tol_numeric = 1e-9,
                                  bool throw_on_violation = true,
                                  const MLControl& ml = {});

}  // namespace fracevo
