#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "fracevo/closedform.hpp"
#include "fracevo/oracle.hpp"

using namespace fracevo;

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= double(n - k + i) / double(i);
  return r;
}

// Classical reference: u'' = (A+B) u + f as a first-order system, RK4.
std::vector<Vector> rk4_second_order(const Matrix& AB, const ForcingTerm& f,
                                     const Vector& x, const Vector& y,
                                     const TimeGrid& grid, int substeps) {
  const int n = static_cast<int>(x.size());
  Vector u = x, v = y;
  std::vector<Vector> out{u};
  const double h = grid.dt() / substeps;
  auto acc = [&](double t, const Vector& uu) { return (AB * uu + f(t)).eval(); };
  for (int i = 0; i < grid.steps(); ++i) {
    for (int s = 0; s < substeps; ++s) {
      const double t = grid.node(i) + s * h;
      const Vector k1u = v, k1v = acc(t, u);
      const Vector k2u = v + 0.5 * h * k1v,
                   k2v = acc(t + 0.5 * h, u + 0.5 * h * k1u);
      const Vector k3u = v + 0.5 * h * k2v,
                   k3v = acc(t + 0.5 * h, u + 0.5 * h * k2u);
      const Vector k4u = v + h * k3v, k4v = acc(t + h, u + h * k3u);
      u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
      v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    out.push_back(u);
  }
  (void)n;
  return out;
}

}  // namespace

TEST_CASE("commutator verdicts") {
  const Matrix I2 = Matrix::Identity(2, 2);
  Matrix B(2, 2);
  B << 0.3, -1.0, 0.7, 0.2;
  auto res = commutator(I2, B);
  CHECK(res.is_zero);
  CHECK(res.value.norm() == 0.0);

  Matrix Up(2, 2), Lo(2, 2);
  Up << 0.0, 1.0, 0.0, 0.0;
  Lo << 0.0, 0.0, 1.0, 0.0;
  res = commutator(Up, Lo);
  CHECK_FALSE(res.is_zero);
  Matrix expected(2, 2);
  expected << 1.0, 0.0, 0.0, -1.0;
  CHECK((res.value - expected).norm() == 0.0);

  // Polynomials in A commute with A.
  Matrix A(3, 3);
  A << -1.0, 0.4, 0.0, 0.2, -0.5, 0.3, 0.0, 0.1, -0.8;
  const Matrix P = 0.3 * A * A - 0.7 * A + 2.0 * Matrix::Identity(3, 3);
  CHECK(commutator(A, P).is_zero);

  CHECK_THROWS_AS(commutator(Matrix::Zero(2, 2), Matrix::Zero(3, 3)),
                  DimensionMismatch);
}

TEST_CASE("q_table base rows and the hand-expanded Q_{1,1}") {
  Matrix A(2, 2), B(2, 2);
  A << 0.0, 1.0, -2.0, 0.0;
  B << 0.0, 0.0, 1.0, 0.0;
  const QTable table(A, B, 4);

  CHECK((table.at(0, 0) - Matrix::Identity(2, 2)).norm() == 0.0);
  CHECK((table.at(3, 0) - A * A * A).norm() < 1e-14);
  CHECK((table.at(0, 3) - B * B * B).norm() < 1e-14);
  CHECK((table.at(1, 1) - (A * B + B * A)).norm() < 1e-14);

  // Recursion consistency at a deeper entry: Q_{2,2} = sum_l A^{2-l} B Q_{l,1}.
  const Matrix direct = A * A * B * table.at(0, 1) / 1.0;  // l = 0 piece
  Matrix sum = Matrix::Zero(2, 2);
  sum += A * A * B * table.at(0, 1);
  sum += A * B * table.at(1, 1);
  sum += B * table.at(2, 1);
  CHECK((table.at(2, 2) - sum).norm() < 1e-13);
  (void)direct;
}

TEST_CASE("q_table collapses to binomials for commuting pairs") {
  Matrix A(2, 2);
  A << -1.0, 0.3, 0.3, -0.6;
  const Matrix B = 0.4 * A + 0.2 * Matrix::Identity(2, 2);
  REQUIRE(commutator(A, B).is_zero);
  const int order = 8;
  const QTable table(A, B, order);

  std::vector<Matrix> Apow{Matrix::Identity(2, 2)}, Bpow{Matrix::Identity(2, 2)};
  for (int k = 1; k <= order; ++k) {
    Apow.push_back(Apow.back() * A);
    Bpow.push_back(Bpow.back() * B);
  }
  for (int n = 0; n <= order; ++n) {
    for (int m = 0; m <= n; ++m) {
      const int k = n - m;
      const Matrix expected = binomial(n, m) * Apow[k] * Bpow[m];
      const double scale = std::max(1.0, expected.norm());
      CHECK((table.at(k, m) - expected).norm() / scale < 1e-11);
    }
    // Binomial resummation: level sums equal (A+B)^n.
    Matrix ABn = Matrix::Identity(2, 2);
    for (int k = 0; k < n; ++k) ABn = ABn * (A + B);
    const double scale = std::max(1.0, ABn.norm());
    CHECK((table.level_sum(n) - ABn).norm() / scale < 1e-11);
  }
}

TEST_CASE("q_table cache shares and grows") {
  Matrix A(2, 2), B(2, 2);
  A << 0.0, 1.0, -2.0, 0.0;
  B << 0.0, 0.0, 1.0, 0.0;
  QTableCache cache;
  const auto t1 = cache.get(A, B, 4);
  const auto t2 = cache.get(A, B, 3);
  CHECK(t1.get() == t2.get());  // reused
  const auto t3 = cache.get(A, B, 6);
  CHECK(t3->order() >= 6);
  CHECK((t3->at(1, 1) - t1->at(1, 1)).norm() == 0.0);
  CHECK(cache.size() == 1);
  const auto t4 = cache.get(B, A, 2);  // different pair
  CHECK(cache.size() == 2);
  (void)t4;
}

TEST_CASE("solve_nonpermutable reduces to the family solution for B = 0") {
  Matrix A(2, 2);
  A << -1.0, 0.5, 0.2, -0.8;
  const Matrix Z = Matrix::Zero(2, 2);
  const FractionalOrder alpha(1.5);
  const TimeGrid grid(1.0, 32);
  Vector x(2), y(2);
  x << 1.0, -0.3;
  y << 0.4, 0.9;
  SeriesControl ctl;
  const auto u =
      solve_nonpermutable(alpha, A, Z, ForcingTerm::zero(2), x, y, grid, ctl);
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    const Vector expected =
        cosine_family(alpha, A, t) * x + sine_family(alpha, A, t) * y;
    CHECK((u.values[i] - expected).norm() < 1e-12);
  }
}

TEST_CASE("solve_nonpermutable agrees with solve_permutable on commuting pairs") {
  Matrix A(2, 2);
  A << -1.0, 0.3, 0.3, -0.6;
  const Matrix B = 0.4 * A + 0.2 * Matrix::Identity(2, 2);
  const FractionalOrder alpha(1.6);
  const TimeGrid grid(1.0, 64);
  Vector x(2), y(2);
  x << 1.0, 0.2;
  y << -0.5, 0.8;
  const auto f = ForcingTerm::constant((Vector(2) << 0.3, -0.2).finished());
  SeriesControl ctl;
  const auto u1 = solve_nonpermutable(alpha, A, B, f, x, y, grid, ctl);
  const auto u2 = solve_permutable(alpha, A, B, f, x, y, grid, ctl);
  double worst = 0.0;
  for (int i = 0; i <= grid.steps(); ++i) {
    worst = std::max(worst, (u1.values[i] - u2.values[i]).norm());
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("solve_nonpermutable matches the Adams oracle off the commuting case") {
  Matrix A(2, 2), B(2, 2);
  A << 0.0, 1.0, -2.0, 0.0;
  B << 0.0, 0.0, 1.0, 0.0;
  REQUIRE_FALSE(commutator(A, B).is_zero);
  const FractionalOrder alpha(1.5);
  const TimeGrid grid(1.0, 512);
  Vector x(2), y(2);
  x << 1.0, 0.0;
  y << 0.0, 1.0;
  SeriesControl ctl;
  const auto u =
      solve_nonpermutable(alpha, A, B, ForcingTerm::zero(2), x, y, grid, ctl);
  IvpSpec spec{alpha, A, TimeDependentOperator::constant(B),
               ForcingTerm::zero(2), x, y, grid};
  const auto oracle = adams_solve(spec);
  double worst = 0.0;
  for (int i = 0; i <= grid.steps(); ++i) {
    worst = std::max(worst,
                     (u.values[i] - oracle.values[i]).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst < 5e-5);
}

TEST_CASE("solve_permutable special values") {
  const FractionalOrder alpha(1.5);
  const TimeGrid grid(1.0, 16);
  Vector x(1), y(1);
  x << 0.7;
  y << -0.4;

  // A + B = 0: u = x + t y, exactly.
  Matrix a(1, 1), b(1, 1);
  a << 0.5;
  b << -0.5;
  SeriesControl ctl;
  const auto u =
      solve_permutable(alpha, a, b, ForcingTerm::zero(1), x, y, grid, ctl);
  for (int i = 0; i <= grid.steps(); ++i) {
    CHECK(u.values[i](0) ==
          doctest::Approx(0.7 - 0.4 * grid.node(i)).epsilon(1e-14));
  }

  // alpha = 2, A + B = -I: cos/sin.
  Matrix a2(1, 1), b2(1, 1);
  a2 << -0.4;
  b2 << -0.6;
  const auto u2 = solve_permutable(FractionalOrder(2.0), a2, b2,
                                   ForcingTerm::zero(1), x, y, grid, ctl);
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    CHECK(u2.values[i](0) ==
          doctest::Approx(0.7 * std::cos(t) - 0.4 * std::sin(t)).epsilon(1e-13));
  }
}

TEST_CASE("solve_permutable forced scalar reference") {
  // a = -1, b = -0.5, f = 1, x = y = 0: u(t) = t^a E_{a,a+1}(-1.5 t^a).
  Matrix a(1, 1), b(1, 1);
  a << -1.0;
  b << -0.5;
  const FractionalOrder alpha(1.5);
  const TimeGrid grid(1.0, 1024);
  const Vector zero = Vector::Zero(1);
  const auto f = ForcingTerm::constant(Vector::Constant(1, 1.0));
  SeriesControl ctl;
  const auto u = solve_permutable(alpha, a, b, f, zero, zero, grid, ctl);
  CHECK(u.values[1024](0) ==
        doctest::Approx(0.54089186802245348).epsilon(1e-6));  // frozen
}

TEST_CASE("solve_permutable rejects non-commuting operators") {
  Matrix A(2, 2), B(2, 2);
  A << 0.0, 1.0, -2.0, 0.0;
  B << 0.0, 0.0, 1.0, 0.0;
  SeriesControl ctl;
  CHECK_THROWS_AS(
      solve_permutable(FractionalOrder(1.5), A, B, ForcingTerm::zero(2),
                       Vector::Zero(2), Vector::Zero(2), TimeGrid(1.0, 8), ctl),
      NotPermutable);
}

TEST_CASE("classical solvers: harmonic oscillator and exact specialization") {
  Matrix A(2, 2);
  A << -1.0, 0.0, 0.0, -1.0;
  const Matrix Z = Matrix::Zero(2, 2);
  const TimeGrid grid(2.0, 64);
  Vector x(2), y(2);
  x << 1.0, 0.0;
  y << 0.0, 1.0;
  SeriesControl ctl;

  const auto u =
      solve_classical_nonpermutable(A, Z, ForcingTerm::zero(2), x, y, grid, ctl);
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    const Vector expected =
        std::cos(t) * x + std::sin(t) * y;
    CHECK((u.values[i] - expected).norm() < 1e-12);
  }

  // Gamma specialization: factorial recurrence vs tgamma path.
  Matrix B(2, 2);
  B << 0.0, 0.0, 1.0, 0.0;
  Matrix A2(2, 2);
  A2 << 0.0, 1.0, -2.0, 0.0;
  const auto uc = solve_classical_nonpermutable(A2, B, ForcingTerm::zero(2), x,
                                                y, grid, ctl);
  const auto uf = solve_nonpermutable(FractionalOrder(2.0), A2, B,
                                      ForcingTerm::zero(2), x, y, grid, ctl);
  double worst = 0.0;
  for (int i = 0; i <= grid.steps(); ++i) {
    worst = std::max(worst, (uc.values[i] - uf.values[i]).norm());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("solve_classical_nonpermutable against the RK4 oracle") {
  Matrix A(2, 2), B(2, 2);
  A << 0.0, 1.0, -2.0, 0.0;
  B << 0.0, 0.0, 1.0, 0.0;
  const TimeGrid grid(1.0, 256);
  Vector x(2), y(2);
  x << 1.0, 0.0;
  y << 0.0, 1.0;
  const auto f = ForcingTerm::constant((Vector(2) << 0.2, 0.5).finished());
  SeriesControl ctl;
  const auto u = solve_classical_nonpermutable(A, B, f, x, y, grid, ctl);
  const auto oracle = rk4_second_order(A + B, f, x, y, grid, 8);
  double worst = 0.0;
  for (int i = 0; i <= grid.steps(); ++i) {
    worst = std::max(worst, (u.values[i] - oracle[i]).norm());
  }
  // second-order forcing quadrature: ~1.8e-6 at N = 64, ~1.1e-7 at N = 256
  CHECK(worst < 5e-7);
}

TEST_CASE("solve_classical_permutable scalar frequencies") {
  // A + B = -w0^2 I: u = cos(w0 t) x + sin(w0 t)/w0 y.
  const double w0 = 2.0;
  Matrix a(1, 1), b(1, 1);
  a << -3.0;
  b << -1.0;
  const TimeGrid grid(1.5, 32);
  Vector x(1), y(1);
  x << 0.8;
  y << -0.6;
  SeriesControl ctl;
  const auto u =
      solve_classical_permutable(a, b, ForcingTerm::zero(1), x, y, grid, ctl);
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    CHECK(u.values[i](0) == doctest::Approx(0.8 * std::cos(w0 * t) -
                                            0.6 * std::sin(w0 * t) / w0)
                                .epsilon(1e-12));
  }

  // Eigen-diagonal oracle: A + B = diag(-1, -4).
  Matrix A2 = Matrix::Zero(2, 2), B2 = Matrix::Zero(2, 2);
  A2(0, 0) = -0.5;
  A2(1, 1) = -3.0;
  B2(0, 0) = -0.5;
  B2(1, 1) = -1.0;
  Vector x2(2), y2(2);
  x2 << 1.0, -1.0;
  y2 << 0.3, 0.7;
  const auto u2 =
      solve_classical_permutable(A2, B2, ForcingTerm::zero(2), x2, y2, grid, ctl);
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    Vector expected(2);
    expected << std::cos(t) * x2(0) + std::sin(t) * y2(0),
        std::cos(2.0 * t) * x2(1) + std::sin(2.0 * t) / 2.0 * y2(1);
    CHECK((u2.values[i] - expected).norm() < 2e-12);
  }
}

TEST_CASE("resolvent factorization spot check for scalars") {
  // (lam^a - a0 - b0)^{-1} = sum_k b0^k (lam^a - a0)^{-k-1} for
  // |b0| < |lam^a - a0|.
  const double a0 = -1.0, b0 = 0.3, av = 1.5, lam = 1.4;
  const double la = std::pow(lam, av);
  double sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    sum += std::pow(b0, k) * std::pow(la - a0, -k - 1.0);
  }
  CHECK(sum == doctest::Approx(1.0 / (la - a0 - b0)).epsilon(1e-13));
}

TEST_CASE("q_table cache tolerates concurrent readers and growers") {
  Matrix A(2, 2), B(2, 2);
  A << 0.0, 1.0, -2.0, 0.0;
  B << 0.0, 0.0, 1.0, 0.0;
  QTableCache cache;
  std::vector<std::thread> workers;
  std::atomic<bool> ok{true};
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (int round = 0; round < 25; ++round) {
        const int order = 2 + (w + round) % 7;
        const auto table = cache.get(A, B, order);
        if (table->order() < order) ok = false;
        if ((table->at(1, 1) - (A * B + B * A)).norm() != 0.0) ok = false;
      }
    });
  }
  for (auto& t : workers) t.join();
  CHECK(ok);
  CHECK(cache.size() == 1);
}

TEST_CASE("solvers are safe to call concurrently") {
  Matrix A(2, 2), B(2, 2);
  A << 0.0, 1.0, -2.0, 0.0;
  B << 0.0, 0.0, 1.0, 0.0;
  const TimeGrid grid(1.0, 64);
  Vector x(2), y(2);
  x << 1.0, 0.0;
  y << 0.0, 1.0;
  SeriesControl ctl;
  const auto reference =
      solve_nonpermutable(FractionalOrder(1.5), A, B, ForcingTerm::zero(2), x,
                          y, grid, ctl);
  std::vector<std::thread> workers;
  std::atomic<bool> ok{true};
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&] {
      const auto u = solve_nonpermutable(FractionalOrder(1.5), A, B,
                                         ForcingTerm::zero(2), x, y, grid, ctl);
      for (int i = 0; i <= grid.steps(); ++i) {
        if ((u.values[i] - reference.values[i]).norm() != 0.0) ok = false;
      }
    });
  }
  for (auto& t : workers) t.join();
  CHECK(ok);
}

TEST_CASE("word_series_order certifies and fails loudly") {
  const int order = word_series_order(2.0, 1.5, 1.0, 1e-12, 64);
  CHECK(order > 0);
  CHECK(order < 64);
  CHECK_THROWS_AS(word_series_order(50.0, 1.05, 4.0, 1e-14, 8),
                  NonConvergence);
}
