// Python bindings for the core operations: special functions, operator
// families, the perturbation-series solver, the closed-form solvers, and the
// reference (oracle) machinery.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fracevo/closedform.hpp"
#include "fracevo/oracle.hpp"
#include "fracevo/perturb.hpp"

namespace py = pybind11;
using namespace fracevo;

namespace {

TimeDependentOperator make_operator(const std::vector<Matrix>& coefficients,
                                    int dim) {
  if (coefficients.empty()) return TimeDependentOperator::zero(dim);
  return TimeDependentOperator::polynomial(coefficients);
}

ForcingTerm make_forcing(const std::vector<Vector>& coefficients, int dim) {
  if (coefficients.empty()) return ForcingTerm::zero(dim);
  return ForcingTerm::polynomial(coefficients);
}

std::vector<Vector> traj_values(const VectorTrajectory& t) { return t.values; }

}  // namespace

PYBIND11_MODULE(_fracevo, m) {
  m.doc() = "Fractional evolution equation solvers (order alpha in (1,2])";

  py::register_exception<NonConvergence>(m, "NonConvergence");
  py::register_exception<NotPermutable>(m, "NotPermutable");
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch");
  py::register_exception<BoundViolation>(m, "BoundViolation");

  m.def("g_kernel", &g_kernel, py::arg("alpha"), py::arg("t"),
        "Convolution kernel t^{alpha-1}/Gamma(alpha), zero for t <= 0");

  m.def(
      "ml_scalar",
      [](double alpha, double beta, double z) {
        return ml_scalar({alpha, beta}, z);
      },
      py::arg("alpha"), py::arg("beta"), py::arg("z"),
      "Two-parameter Mittag-Leffler function E_{alpha,beta}(z)");

  m.def(
      "ml_matrix",
      [](double alpha, double beta, const Matrix& M, double scale) {
        return ml_matrix({alpha, beta}, M, scale);
      },
      py::arg("alpha"), py::arg("beta"), py::arg("M"), py::arg("scale") = 1.0,
      "Matrix Mittag-Leffler function E_{alpha,beta}(M*scale)");

  m.def(
      "cosine_family",
      [](double alpha, const Matrix& A, double t) {
        return cosine_family(FractionalOrder(alpha), A, t);
      },
      py::arg("alpha"), py::arg("A"), py::arg("t"));
  m.def(
      "sine_family",
      [](double alpha, const Matrix& A, double t) {
        return sine_family(FractionalOrder(alpha), A, t);
      },
      py::arg("alpha"), py::arg("A"), py::arg("t"));
  m.def(
      "rl_family",
      [](double alpha, const Matrix& A, double t) {
        return rl_family(FractionalOrder(alpha), A, t);
      },
      py::arg("alpha"), py::arg("A"), py::arg("t"));
  m.def(
      "rl_family_derivative",
      [](double alpha, const Matrix& A, double t) {
        return rl_family_derivative(FractionalOrder(alpha), A, t);
      },
      py::arg("alpha"), py::arg("A"), py::arg("t"),
      "d/dt T_alpha(t;A); singular at t = 0 for alpha < 2");

  m.def(
      "commutator",
      [](const Matrix& A, const Matrix& B) {
        const auto res = commutator(A, B);
        return py::make_tuple(res.value, res.is_zero);
      },
      py::arg("A"), py::arg("B"), "Returns ([A,B], is_zero)");

  m.def(
      "q_table",
      [](const Matrix& A, const Matrix& B, int order) {
        const QTable table(A, B, order);
        std::vector<std::vector<Matrix>> rows;
        for (int n = 0; n <= order; ++n) {
          std::vector<Matrix> level;
          for (int m = 0; m <= n; ++m) level.push_back(table.at(n - m, m));
          rows.push_back(std::move(level));
        }
        return rows;
      },
      py::arg("A"), py::arg("B"), py::arg("order"),
      "Word sums Q_{k,m} grouped by level n = k+m (entries Q_{n-m,m})");

  m.def(
      "solve_ivp",
      [](double alpha, const Matrix& A, const std::vector<Matrix>& B,
         const std::vector<Vector>& f, const Vector& x, const Vector& y,
         double T, int N, double tol) {
        const FractionalOrder order(alpha);
        const TimeGrid grid(T, N);
        const int dim = static_cast<int>(A.rows());
        const auto Bmap = make_operator(B, dim);
        const auto fmap = make_forcing(f, dim);
        const auto ctl = prepare_control(order, A, Bmap, fmap, grid, tol);
        const auto sol = solve_ivp(order, A, Bmap, fmap, x, y, grid, ctl);
        return traj_values(sol.trajectory);
      },
      py::arg("alpha"), py::arg("A"), py::arg("B") = std::vector<Matrix>{},
      py::arg("f") = std::vector<Vector>{}, py::arg("x"), py::arg("y"),
      py::arg("T") = 1.0, py::arg("N") = 256, py::arg("tol") = 1e-12,
      "Perturbation-series solution of D^alpha u = (A + B(t)) u + f(t); "
      "B and f are lists of polynomial coefficients in t");

  m.def(
      "solve_nonpermutable",
      [](double alpha, const Matrix& A, const Matrix& B,
         const std::vector<Vector>& f, const Vector& x, const Vector& y,
         double T, int N, double tol) {
        const TimeGrid grid(T, N);
        SeriesControl ctl;
        ctl.tol = tol;
        return traj_values(solve_nonpermutable(
            FractionalOrder(alpha), A, B,
            make_forcing(f, static_cast<int>(A.rows())), x, y, grid, ctl));
      },
      py::arg("alpha"), py::arg("A"), py::arg("B"),
      py::arg("f") = std::vector<Vector>{}, py::arg("x"), py::arg("y"),
      py::arg("T") = 1.0, py::arg("N") = 256, py::arg("tol") = 1e-12);

  m.def(
      "solve_permutable",
      [](double alpha, const Matrix& A, const Matrix& B,
         const std::vector<Vector>& f, const Vector& x, const Vector& y,
         double T, int N, double tol) {
        const TimeGrid grid(T, N);
        SeriesControl ctl;
        ctl.tol = tol;
        return traj_values(solve_permutable(
            FractionalOrder(alpha), A, B,
            make_forcing(f, static_cast<int>(A.rows())), x, y, grid, ctl));
      },
      py::arg("alpha"), py::arg("A"), py::arg("B"),
      py::arg("f") = std::vector<Vector>{}, py::arg("x"), py::arg("y"),
      py::arg("T") = 1.0, py::arg("N") = 256, py::arg("tol") = 1e-12);

  m.def(
      "variation_of_constants",
      [](double alpha, const Matrix& A, const Matrix& B,
         const std::vector<Vector>& f, double T, int N) {
        const TimeGrid grid(T, N);
        SeriesControl ctl;
        return traj_values(variation_of_constants(
            FractionalOrder(alpha), A, B,
            make_forcing(f, static_cast<int>(A.rows())), grid, ctl));
      },
      py::arg("alpha"), py::arg("A"), py::arg("B"),
      py::arg("f") = std::vector<Vector>{}, py::arg("T") = 1.0,
      py::arg("N") = 256,
      "Particular solution T_alpha(.;A+B) * f for constant B");

  m.def(
      "adams_solve",
      [](double alpha, const Matrix& A, const std::vector<Matrix>& B,
         const std::vector<Vector>& f, const Vector& x, const Vector& y,
         double T, int N) {
        const int dim = static_cast<int>(A.rows());
        IvpSpec spec{FractionalOrder(alpha), A,
                     make_operator(B, dim),     make_forcing(f, dim),
                     x,                         y,
                     TimeGrid(T, N)};
        return traj_values(adams_solve(spec));
      },
      py::arg("alpha"), py::arg("A"), py::arg("B") = std::vector<Matrix>{},
      py::arg("f") = std::vector<Vector>{}, py::arg("x"), py::arg("y"),
      py::arg("T") = 1.0, py::arg("N") = 256,
      "Fractional Adams predictor-corrector reference solution");

  m.def(
      "caputo_derivative",
      [](double alpha, const std::vector<Vector>& u, double T) {
        const TimeGrid grid(T, static_cast<int>(u.size()) - 1);
        return traj_values(
            caputo_l1_derivative(VectorTrajectory(grid, u),
                                 FractionalOrder(alpha)));
      },
      py::arg("alpha"), py::arg("u"), py::arg("T"),
      "Discrete Caputo derivative of a sampled trajectory");

  m.def(
      "residual",
      [](double alpha, const Matrix& A, const std::vector<Matrix>& B,
         const std::vector<Vector>& f, const Vector& x, const Vector& y,
         const std::vector<Vector>& u, double T) {
        const int dim = static_cast<int>(A.rows());
        const TimeGrid grid(T, static_cast<int>(u.size()) - 1);
        IvpSpec spec{FractionalOrder(alpha), A,
                     make_operator(B, dim),     make_forcing(f, dim),
                     x,                         y,
                     grid};
        return residual(VectorTrajectory(grid, u), spec);
      },
      py::arg("alpha"), py::arg("A"), py::arg("B") = std::vector<Matrix>{},
      py::arg("f") = std::vector<Vector>{}, py::arg("x"), py::arg("y"),
      py::arg("u"), py::arg("T"),
      "Interior-node defect of a candidate trajectory");

  m.def(
      "estimate_envelope",
      [](double alpha, const Matrix& A, double T, int N) {
        const auto env =
            estimate_envelope(FractionalOrder(alpha), A, TimeGrid(T, N));
        return py::make_tuple(env.M, env.omega);
      },
      py::arg("alpha"), py::arg("A"), py::arg("T") = 1.0, py::arg("N") = 64,
      "Grid-certified (M, omega) with ||C_alpha(t;A)|| <= M e^{omega t}");

  m.def(
      "growth_bound_margins",
      [](double alpha, const Matrix& A, const Matrix& B, double T, int N) {
        const FractionalOrder order(alpha);
        const TimeGrid grid(T, N);
        const auto Bmap = TimeDependentOperator::constant(B);
        const auto ctl = prepare_control(
            order, A, Bmap, ForcingTerm::zero(static_cast<int>(A.rows())),
            grid, 1e-12);
        const auto report = verify_growth_bounds(order, A, Bmap, grid, ctl,
                                                 1e-9, false);
        std::vector<double> margins;
        for (const auto& row : report.rows) {
          margins.push_back(std::min({row.margin_cos, row.margin_sin,
                                      row.margin_cos_diff,
                                      row.margin_sin_diff}));
        }
        return margins;
      },
      py::arg("alpha"), py::arg("A"), py::arg("B"), py::arg("T") = 1.0,
      py::arg("N") = 64, "Worst growth-bound margin per grid node");
}
