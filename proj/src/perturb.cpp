#include "fracevo/perturb.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fracevo {

namespace {

void require_square_match(const Matrix& A, int dim, const char* what) {
  if (A.rows() != A.cols()) throw DimensionMismatch("operator must be square");
  if (dim >= 0 && A.rows() != dim) {
    throw DimensionMismatch(std::string(what) +
                            ": operator dimension mismatch");
  }
}

// g_p(t) with the t -> 0+ limit convention used by the term bounds (only the
// p = 1 bound is non-vanishing at the origin).
double g_limit(double p, double t) {
  if (t == 0.0) return p == 1.0 ? 1.0 : 0.0;
  return g_kernel(p, t);
}

template <class Value>
std::vector<Value> sample_map(const TimeDependentMap<Value>& map,
                              const TimeGrid& grid) {
  std::vector<Value> out;
  out.reserve(grid.nodes());
  for (int i = 0; i <= grid.steps(); ++i) out.push_back(map(grid.node(i)));
  return out;
}

template <class Value>
std::vector<Value> multiply_samples(const std::vector<Matrix>& B,
                                    const std::vector<Value>& v) {
  std::vector<Value> out;
  out.reserve(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out.push_back(B[j] * v[j]);
  return out;
}

void check_envelope_on_samples(const SeriesControl& ctl,
                               const std::vector<Matrix>& cosine_samples,
                               const TimeGrid& grid) {
  for (int i = 0; i <= grid.steps(); ++i) {
    const double lhs = operator_norm(cosine_samples[i]);
    const double rhs =
        ctl.envelope.M * std::exp(ctl.envelope.omega * grid.node(i));
    if (lhs > rhs * (1.0 + 1e-10)) {
      std::ostringstream os;
      os << "growth envelope (M=" << ctl.envelope.M
         << ", omega=" << ctl.envelope.omega
         << ") is not certified at t=" << grid.node(i) << ": ||C||=" << lhs
         << " exceeds " << rhs;
      throw ConfigError(os.str());
    }
  }
}

// Shared series driver: seed trajectory, then repeated Duhamel iteration
// with B until the certified remainder clears the tolerance.
template <class Value>
SeriesSum<Value> sum_series(const std::vector<Value>& seed,
                            const std::vector<Matrix>& Bs,
                            const ProductRule& rule,
                            const std::vector<Matrix>& kernel,
                            FractionalOrder alpha, const TimeGrid& grid,
                            const SeriesControl& ctl, SeriesVariant variant) {
  std::vector<Value> sum = seed;
  std::vector<Value> term = seed;
  const double T = grid.horizon();

  int n = 0;
  double remainder = tail_remainder(n, T, alpha, ctl, variant);
  while (remainder > ctl.tol) {
    if (n + 1 >= ctl.max_terms) {
      std::ostringstream os;
      os << "perturbation series not certified after " << ctl.max_terms
         << " terms: remainder bound " << remainder << " > tol " << ctl.tol;
      throw NonConvergence(os.str());
    }
    term = kernel_convolution(rule, kernel, multiply_samples(Bs, term));
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += term[i];
    ++n;
    remainder = tail_remainder(n, T, alpha, ctl, variant);
  }

  return SeriesSum<Value>{Trajectory<Value>(grid, std::move(sum)), n + 1,
                          remainder};
}

}  // namespace

std::vector<Matrix> duhamel_kernel_table(FractionalOrder alpha, const Matrix& A,
                                         const TimeGrid& grid,
                                         const MLControl& ctl) {
  require_square_match(A, -1, "duhamel_kernel_table");
  const double a = alpha.value();
  std::vector<Matrix> table;
  table.reserve(grid.nodes());
  for (int m = 0; m <= grid.steps(); ++m) {
    table.push_back(
        ml_matrix({a, a}, A, std::pow(grid.node(m), a), ctl));
  }
  return table;
}

OperatorTrajectory singular_convolution(FractionalOrder alpha, const Matrix& A,
                                        const OperatorTrajectory& integrand,
                                        const MLControl& ctl) {
  require_square_match(A, static_cast<int>(integrand.values.front().rows()),
                       "singular_convolution");
  const ProductRule rule(alpha.value(), integrand.grid);
  auto table = duhamel_kernel_table(alpha, A, integrand.grid, ctl);
  return OperatorTrajectory(integrand.grid,
                            kernel_convolution(rule, table, integrand.values));
}

VectorTrajectory singular_convolution(FractionalOrder alpha, const Matrix& A,
                                      const VectorTrajectory& integrand,
                                      const MLControl& ctl) {
  require_square_match(A, static_cast<int>(integrand.values.front().size()),
                       "singular_convolution");
  const ProductRule rule(alpha.value(), integrand.grid);
  auto table = duhamel_kernel_table(alpha, A, integrand.grid, ctl);
  return VectorTrajectory(integrand.grid,
                          kernel_convolution(rule, table, integrand.values));
}

namespace {

std::vector<Matrix> family_samples(FractionalOrder alpha, const Matrix& A,
                                   const TimeGrid& grid, bool sine,
                                   const MLControl& ctl) {
  std::vector<Matrix> out;
  out.reserve(grid.nodes());
  for (int i = 0; i <= grid.steps(); ++i) {
    out.push_back(sine ? sine_family(alpha, A, grid.node(i), ctl)
                       : cosine_family(alpha, A, grid.node(i), ctl));
  }
  return out;
}

OperatorTrajectory series_term(int n, FractionalOrder alpha, const Matrix& A,
                               const TimeDependentOperator& B,
                               const TimeGrid& grid, bool sine,
                               const MLControl& ctl) {
  if (n < 0) throw ConfigError("series term index must be nonnegative");
  require_square_match(A, B.dim(), "series_term");
  std::vector<Matrix> term = family_samples(alpha, A, grid, sine, ctl);
  if (n == 0) return OperatorTrajectory(grid, std::move(term));

  const ProductRule rule(alpha.value(), grid);
  const auto kernel = duhamel_kernel_table(alpha, A, grid, ctl);
  const auto Bs = sample_map(B, grid);
  for (int k = 1; k <= n; ++k) {
    term = kernel_convolution(rule, kernel, multiply_samples(Bs, term));
  }
  return OperatorTrajectory(grid, std::move(term));
}

}  // namespace

OperatorTrajectory series_term_cosine(int n, FractionalOrder alpha,
                                      const Matrix& A,
                                      const TimeDependentOperator& B,
                                      const TimeGrid& grid,
                                      const MLControl& ctl) {
  return series_term(n, alpha, A, B, grid, /*sine=*/false, ctl);
}

OperatorTrajectory series_term_sine(int n, FractionalOrder alpha,
                                    const Matrix& A,
                                    const TimeDependentOperator& B,
                                    const TimeGrid& grid,
                                    const MLControl& ctl) {
  return series_term(n, alpha, A, B, grid, /*sine=*/true, ctl);
}

double tail_bound(int n, double t, FractionalOrder alpha,
                  const SeriesControl& ctl, SeriesVariant variant) {
  if (n < 0) return 0.0;
  const double M = ctl.envelope.M;
  const double K = ctl.K_t;
  const double a = alpha.value();
  const double envelope = M * std::exp(ctl.envelope.omega * t);
  const double powers = std::pow(M * K, n);  // M^{n+1} K^n = M (MK)^n
  switch (variant) {
    case SeriesVariant::cosine:
      return envelope * powers * g_limit(n * a + 1.0, t);
    case SeriesVariant::sine:
      return envelope * powers * g_limit(n * a + 2.0, t);
    case SeriesVariant::particular:
      return envelope * powers * ctl.N_t * g_limit(n * a + a + 1.0, t);
  }
  return 0.0;
}

double tail_remainder(int after, double t, FractionalOrder alpha,
                      const SeriesControl& ctl, SeriesVariant variant) {
  double acc = 0.0;
  for (int n = after + 1; n < after + 4000; ++n) {
    const double b = tail_bound(n, t, alpha, ctl, variant);
    acc += b;
    if (b <= acc * 1e-16) break;  // factorial decay has taken over
  }
  return acc;
}

SeriesControl prepare_control(FractionalOrder alpha, const Matrix& A,
                              const TimeDependentOperator& B,
                              const ForcingTerm& f, const TimeGrid& grid,
                              double tol, int max_terms,
                              std::optional<GrowthEnvelope> envelope,
                              const MLControl& ml) {
  SeriesControl ctl;
  ctl.tol = tol;
  ctl.max_terms = max_terms;
  ctl.envelope = envelope ? *envelope : estimate_envelope(alpha, A, grid, ml);
  if (envelope && !envelope_certified(*envelope, alpha, A, grid, ml)) {
    throw ConfigError(
        "supplied growth envelope is not certified on the grid; "
        "raise M or omega");
  }
  double K = 0.0;
  double N = 0.0;
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    K = std::max(K, operator_norm(B(t)));
    K = std::max(K, operator_norm(B.derivative(t)));
    N = std::max(N, f(t).norm());
    N = std::max(N, f.derivative(t).norm());
  }
  ctl.K_t = K;
  ctl.N_t = N;
  return ctl;
}

namespace {

SeriesSum<Matrix> perturbed_family(FractionalOrder alpha, const Matrix& A,
                                   const TimeDependentOperator& B,
                                   const TimeGrid& grid,
                                   const SeriesControl& ctl, bool sine,
                                   const MLControl& ml) {
  require_square_match(A, B.dim(), "perturbed family");
  auto seed = family_samples(alpha, A, grid, sine, ml);
  if (!sine) check_envelope_on_samples(ctl, seed, grid);

  const ProductRule rule(alpha.value(), grid);
  const auto kernel = duhamel_kernel_table(alpha, A, grid, ml);
  const auto Bs = sample_map(B, grid);
  return sum_series(seed, Bs, rule, kernel, alpha, grid, ctl,
                    sine ? SeriesVariant::sine : SeriesVariant::cosine);
}

}  // namespace

SeriesSum<Matrix> perturbed_cosine(FractionalOrder alpha, const Matrix& A,
                                   const TimeDependentOperator& B,
                                   const TimeGrid& grid,
                                   const SeriesControl& ctl,
                                   const MLControl& ml) {
  return perturbed_family(alpha, A, B, grid, ctl, /*sine=*/false, ml);
}

SeriesSum<Matrix> perturbed_sine(FractionalOrder alpha, const Matrix& A,
                                 const TimeDependentOperator& B,
                                 const TimeGrid& grid, const SeriesControl& ctl,
                                 const MLControl& ml) {
  return perturbed_family(alpha, A, B, grid, ctl, /*sine=*/true, ml);
}

SeriesSum<Vector> particular_solution(FractionalOrder alpha, const Matrix& A,
                                      const TimeDependentOperator& B,
                                      const ForcingTerm& f,
                                      const TimeGrid& grid,
                                      const SeriesControl& ctl,
                                      const MLControl& ml) {
  require_square_match(A, B.dim(), "particular_solution");
  if (f.dim() != A.rows()) {
    throw DimensionMismatch("forcing dimension must match the operator");
  }
  const ProductRule rule(alpha.value(), grid);
  const auto kernel = duhamel_kernel_table(alpha, A, grid, ml);
  const auto Bs = sample_map(B, grid);
  const auto seed = kernel_convolution(rule, kernel, sample_map(f, grid));
  return sum_series(seed, Bs, rule, kernel, alpha, grid, ctl,
                    SeriesVariant::particular);
}

VectorTrajectory variation_of_constants(FractionalOrder alpha, const Matrix& A,
                                        const Matrix& B_const,
                                        const ForcingTerm& f,
                                        const TimeGrid& grid,
                                        const SeriesControl&,
                                        const MLControl& ml) {
  require_square_match(A, static_cast<int>(B_const.rows()),
                       "variation_of_constants");
  const Matrix AB = A + B_const;
  const ProductRule rule(alpha.value(), grid);
  const auto kernel = duhamel_kernel_table(alpha, AB, grid, ml);
  return VectorTrajectory(
      grid, kernel_convolution(rule, kernel, sample_map(f, grid)));
}

VectorTrajectory apply_trajectory(const OperatorTrajectory& ops,
                                  const Vector& x) {
  if (ops.values.front().cols() != x.size()) {
    throw DimensionMismatch("trajectory/vector dimension mismatch");
  }
  std::vector<Vector> out;
  out.reserve(ops.values.size());
  for (const auto& T : ops.values) out.push_back(T * x);
  return VectorTrajectory(ops.grid, std::move(out));
}

IvpSolution solve_ivp(FractionalOrder alpha, const Matrix& A,
                      const TimeDependentOperator& B, const ForcingTerm& f,
                      const Vector& x, const Vector& y, const TimeGrid& grid,
                      const SeriesControl& ctl, const MLControl& ml) {
  if (x.size() != A.rows() || y.size() != A.rows()) {
    throw DimensionMismatch("initial data dimension must match the operator");
  }
  const auto cos_sum = perturbed_cosine(alpha, A, B, grid, ctl, ml);
  const auto sin_sum = perturbed_sine(alpha, A, B, grid, ctl, ml);

  std::vector<Vector> u;
  u.reserve(grid.nodes());
  for (int i = 0; i <= grid.steps(); ++i) {
    u.push_back(cos_sum.trajectory.values[i] * x +
                sin_sum.trajectory.values[i] * y);
  }

  IvpSolution sol{VectorTrajectory(grid, std::move(u)),
                  cos_sum.terms_used,
                  sin_sum.terms_used,
                  0,
                  cos_sum.certified_remainder,
                  sin_sum.certified_remainder,
                  0.0};

  if (!f.is_constant_zero()) {
    const auto w = particular_solution(alpha, A, B, f, grid, ctl, ml);
    for (int i = 0; i <= grid.steps(); ++i) {
      sol.trajectory.values[i] += w.trajectory.values[i];
    }
    sol.forcing_terms = w.terms_used;
    sol.forcing_remainder = w.certified_remainder;
  }
  return sol;
}

BoundsReport verify_growth_bounds(FractionalOrder alpha, const Matrix& A,
                                  const TimeDependentOperator& B,
                                  const TimeGrid& grid,
                                  const SeriesControl& ctl, double tol_numeric,
                                  bool throw_on_violation,
                                  const MLControl& ml) {
  const auto cos_sum = perturbed_cosine(alpha, A, B, grid, ctl, ml);
  const auto sin_sum = perturbed_sine(alpha, A, B, grid, ctl, ml);
  const double a = alpha.value();
  const double M = ctl.envelope.M;
  const double MK = M * ctl.K_t;

  BoundsReport report;
  report.rows.reserve(grid.nodes());
  report.min_margin = std::numeric_limits<double>::infinity();

  for (int i = 0; i <= grid.steps(); ++i) {
    const double s = grid.node(i);
    const double envelope = M * std::exp(ctl.envelope.omega * s);
    const double e1 = ml_scalar({a, 1.0}, MK * std::pow(s, a), ml);
    const double e2 = ml_scalar({a, 2.0}, MK * std::pow(s, a), ml);

    BoundsRow row;
    row.t = s;
    row.norm_cos = operator_norm(cos_sum.trajectory.values[i]);
    row.bound_cos = envelope * e1;
    row.margin_cos = row.bound_cos - row.norm_cos;

    row.norm_sin = operator_norm(sin_sum.trajectory.values[i]);
    row.bound_sin = envelope * s * e2;
    row.margin_sin = row.bound_sin - row.norm_sin;

    const Matrix cos0 = cosine_family(alpha, A, s, ml);
    const Matrix sin0 = sine_family(alpha, A, s, ml);
    row.norm_cos_diff = operator_norm(cos_sum.trajectory.values[i] - cos0);
    row.bound_cos_diff = envelope * (e1 - 1.0);
    row.margin_cos_diff = row.bound_cos_diff - row.norm_cos_diff;

    row.norm_sin_diff = operator_norm(sin_sum.trajectory.values[i] - sin0);
    row.bound_sin_diff = envelope * s * (e2 - 1.0);
    row.margin_sin_diff = row.bound_sin_diff - row.norm_sin_diff;

    report.min_margin = std::min({report.min_margin, row.margin_cos,
                                  row.margin_sin, row.margin_cos_diff,
                                  row.margin_sin_diff});
    report.rows.push_back(row);
  }

  report.ok = report.min_margin >= -tol_numeric;
  if (!report.ok && throw_on_violation) {
    std::ostringstream os;
    os << "growth bound violated (worst margin " << report.min_margin
       << ") at nodes:";
    for (const auto& row : report.rows) {
      const double worst = std::min({row.margin_cos, row.margin_sin,
                                     row.margin_cos_diff, row.margin_sin_diff});
      if (worst < -tol_numeric) os << ' ' << row.t;
    }
    throw BoundViolation(os.str());
  }
  return report;
}

}  // namespace fracevo
