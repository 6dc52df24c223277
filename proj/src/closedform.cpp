#include "fracevo/closedform.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <sstream>

namespace fracevo {

namespace {

// t^p / Gamma(q), robust against overflow of either factor.
double power_over_gamma(double p, double q, double t) {
  if (p == 0.0) return reciprocal_gamma(q);
  if (t <= 0.0) return 0.0;
  if (q <= 170.0) {
    const double num = std::pow(t, p);
    if (std::isfinite(num)) return num * reciprocal_gamma(q);
  }
  return std::exp(p * std::log(t) - std::lgamma(q));
}

}  // namespace

CommutatorResult commutator(const Matrix& A, const Matrix& B, double tol) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() != A.cols()) {
    throw DimensionMismatch("commutator needs square operators of equal size");
  }
  CommutatorResult res;
  res.value = A * B - B * A;
  res.is_zero =
      operator_norm(res.value) <= tol * operator_norm(A) * operator_norm(B);
  return res;
}

QTable::QTable(const Matrix& A, const Matrix& B, int order) : A_(A), B_(B) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows()) {
    throw DimensionMismatch("Q table needs square operators of equal size");
  }
  if (order < 0) throw ConfigError("Q table order must be nonnegative");
  build(order);
}

int QTable::index(int k, int m) const {
  const int n = k + m;
  return n * (n + 1) / 2 + m;
}

const Matrix& QTable::at(int k, int m) const {
  if (k < 0 || m < 0 || k + m > order_) {
    throw ConfigError("Q table entry outside the built order");
  }
  return entries_[index(k, m)];
}

const Matrix& QTable::level_sum(int n) const {
  if (n < 0 || n > order_) {
    throw ConfigError("Q table level outside the built order");
  }
  return level_sums_[n];
}

void QTable::extend(int order) {
  if (order > order_) build(order);
}

void QTable::build(int target) {
  const int dim = static_cast<int>(A_.rows());
  entries_.resize((target + 1) * (target + 2) / 2);
  level_sums_.resize(target + 1);
  for (int n = order_ + 1; n <= target; ++n) {
    // Q_{n,0} = A^n, everything else by the word recursion over m.
    entries_[index(n, 0)] =
        n == 0 ? Matrix::Identity(dim, dim) : Matrix(A_ * at(n - 1, 0));
    for (int m = 1; m <= n; ++m) {
      const int k = n - m;
      Matrix sum = Matrix::Zero(dim, dim);
      Matrix a_power = Matrix::Identity(dim, dim);  // A^{k-l}, built from l=k
      for (int l = k; l >= 0; --l) {
        sum.noalias() += a_power * B_ * at(l, m - 1);
        if (l > 0) a_power = a_power * A_;
      }
      entries_[index(k, m)] = std::move(sum);
    }
    order_ = n;  // at() reads prior levels while the next one is built
    Matrix level = Matrix::Zero(dim, dim);
    for (int m = 0; m <= n; ++m) level += at(n - m, m);
    level_sums_[n] = std::move(level);
  }
  order_ = target;
}

QTable q_table(const Matrix& A, const Matrix& B, int order) {
  return QTable(A, B, order);
}

std::uint64_t QTableCache::pair_hash(const Matrix& A, const Matrix& B) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over raw entries
  auto mix = [&h](const Matrix& M) {
    for (Eigen::Index i = 0; i < M.size(); ++i) {
      std::uint64_t bits;
      const double v = M.data()[i];
      std::memcpy(&bits, &v, sizeof(bits));
      h ^= bits;
      h *= 1099511628211ull;
    }
    h ^= static_cast<std::uint64_t>(M.rows());
    h *= 1099511628211ull;
  };
  mix(A);
  mix(B);
  return h;
}

std::shared_ptr<const QTable> QTableCache::get(const Matrix& A, const Matrix& B,
                                               int order) {
  std::uint64_t key = pair_hash(A, B);
  {
    std::shared_lock lock(mutex_);
    for (std::uint64_t probe = key;; ++probe) {
      auto it = tables_.find(probe);
      if (it == tables_.end()) break;
      if (it->second->A() == A && it->second->B() == B) {
        if (it->second->order() >= order) return it->second;
        key = probe;
        break;
      }
    }
  }
  std::unique_lock lock(mutex_);
  for (;; ++key) {
    auto it = tables_.find(key);
    if (it == tables_.end()) {
      auto fresh = std::make_shared<QTable>(A, B, order);
      tables_[key] = fresh;
      return fresh;
    }
    if (it->second->A() == A && it->second->B() == B) {
      if (it->second->order() >= order) return it->second;
      auto grown = std::make_shared<QTable>(*it->second);
      grown->extend(order);
      it->second = grown;  // readers keep their old shared_ptr
      return grown;
    }
  }
}

std::size_t QTableCache::size() const {
  std::shared_lock lock(mutex_);
  return tables_.size();
}

QTableCache& global_q_cache() {
  static QTableCache cache;
  return cache;
}

int word_series_order(double operator_scale, double alpha, double T, double tol,
                      int max_terms) {
  // Remainder after n0: sum_{n>n0} rho^n T^{n alpha} / Gamma(n alpha + 1).
  std::vector<double> terms;
  terms.reserve(64);
  double suffix = 0.0;
  for (int n = 0; n < max_terms + 64; ++n) {
    const double term =
        std::pow(operator_scale, n) * power_over_gamma(n * alpha, n * alpha + 1.0, T);
    terms.push_back(term);
    if (n > 2 && term < tol * 1e-3 && term < terms[n - 1]) break;
  }
  for (int n = static_cast<int>(terms.size()) - 1; n >= 0; --n) {
    suffix += terms[n];
    if (suffix >= tol) {
      const int order = n;  // remainder after `order` is certified < tol
      if (order >= max_terms) {
        std::ostringstream os;
        os << "word series needs more than " << max_terms
           << " levels to certify tolerance " << tol;
        throw NonConvergence(os.str());
      }
      return order;
    }
  }
  return 0;
}

VectorTrajectory solve_nonpermutable(FractionalOrder alpha, const Matrix& A,
                                     const Matrix& B, const ForcingTerm& f,
                                     const Vector& x, const Vector& y,
                                     const TimeGrid& grid,
                                     const SeriesControl& ctl) {
  if (A.rows() != B.rows() || A.rows() != x.size() || A.rows() != y.size()) {
    throw DimensionMismatch("solve_nonpermutable: dimensions disagree");
  }
  const double a = alpha.value();
  const double rho = operator_norm(A) + operator_norm(B);
  const int order =
      word_series_order(rho, a, grid.horizon(), ctl.tol, ctl.max_terms);
  const auto table = global_q_cache().get(A, B, order);

  std::vector<Vector> rx(order + 1), ry(order + 1);
  for (int n = 0; n <= order; ++n) {
    rx[n] = table->level_sum(n) * x;
    ry[n] = table->level_sum(n) * y;
  }

  const int N = grid.steps();
  std::vector<Vector> u(N + 1, Vector::Zero(x.size()));
  u[0] = x;
  for (int i = 1; i <= N; ++i) {
    const double t = grid.node(i);
    Vector acc = Vector::Zero(x.size());
    for (int n = 0; n <= order; ++n) {
      acc += rx[n] * power_over_gamma(n * a, n * a + 1.0, t);
      acc += ry[n] * power_over_gamma(n * a + 1.0, n * a + 2.0, t);
    }
    u[i] = acc;
  }

  if (!f.is_constant_zero()) {
    // Forcing kernel sum_n R_n u^{n alpha + alpha - 1}/Gamma(n alpha + alpha)
    // = u^{alpha-1} * (analytic word series), handled by the product rule.
    const int dim = static_cast<int>(A.rows());
    std::vector<Matrix> kernel(N + 1, Matrix::Zero(dim, dim));
    for (int m = 0; m <= N; ++m) {
      const double tau = grid.node(m);
      for (int n = 0; n <= order; ++n) {
        kernel[m] += table->level_sum(n) *
                     power_over_gamma(n * a, n * a + a, tau);
      }
    }
    const ProductRule rule(a, grid);
    std::vector<Vector> fs;
    fs.reserve(N + 1);
    for (int i = 0; i <= N; ++i) fs.push_back(f(grid.node(i)));
    auto w = kernel_convolution(rule, kernel, fs);
    for (int i = 0; i <= N; ++i) u[i] += w[i];
  }
  return VectorTrajectory(grid, std::move(u));
}

VectorTrajectory solve_permutable(FractionalOrder alpha, const Matrix& A,
                                  const Matrix& B, const ForcingTerm& f,
                                  const Vector& x, const Vector& y,
                                  const TimeGrid& grid,
                                  const SeriesControl& ctl,
                                  const MLControl& ml) {
  if (A.rows() != B.rows() || A.rows() != x.size() || A.rows() != y.size()) {
    throw DimensionMismatch("solve_permutable: dimensions disagree");
  }
  const auto comm = commutator(A, B);
  if (!comm.is_zero) {
    std::ostringstream os;
    os << "operators do not commute: ||[A,B]|| = " << operator_norm(comm.value)
       << "; the permutable closed form does not apply";
    throw NotPermutable(os.str());
  }

  const Matrix AB = A + B;
  const int N = grid.steps();
  std::vector<Vector> u(N + 1, Vector::Zero(x.size()));
  for (int i = 0; i <= N; ++i) {
    const double t = grid.node(i);
    u[i] = cosine_family(alpha, AB, t, ml) * x +
           sine_family(alpha, AB, t, ml) * y;
  }
  if (!f.is_constant_zero()) {
    auto w = variation_of_constants(alpha, A, B, f, grid, ctl, ml);
    for (int i = 0; i <= N; ++i) u[i] += w.values[i];
  }
  return VectorTrajectory(grid, std::move(u));
}

VectorTrajectory solve_classical_nonpermutable(const Matrix& A, const Matrix& B,
                                               const ForcingTerm& f,
                                               const Vector& x, const Vector& y,
                                               const TimeGrid& grid,
                                               const SeriesControl& ctl) {
  if (A.rows() != B.rows() || A.rows() != x.size() || A.rows() != y.size()) {
    throw DimensionMismatch("solve_classical_nonpermutable: dimensions disagree");
  }
  const double rho = operator_norm(A) + operator_norm(B);
  const int order =
      word_series_order(rho, 2.0, grid.horizon(), ctl.tol, ctl.max_terms);
  const auto table = global_q_cache().get(A, B, order);

  std::vector<Vector> rx(order + 1), ry(order + 1);
  for (int n = 0; n <= order; ++n) {
    rx[n] = table->level_sum(n) * x;
    ry[n] = table->level_sum(n) * y;
  }

  const int N = grid.steps();
  std::vector<Vector> u(N + 1, Vector::Zero(x.size()));
  u[0] = x;
  for (int i = 1; i <= N; ++i) {
    const double t = grid.node(i);
    // c_n = t^{2n}/(2n)!, d_n = t^{2n+1}/(2n+1)! by term recurrences.
    double c = 1.0;
    Vector acc = Vector::Zero(x.size());
    for (int n = 0; n <= order; ++n) {
      acc += rx[n] * c;
      acc += ry[n] * (c * t / (2.0 * n + 1.0));
      c *= t * t / ((2.0 * n + 1.0) * (2.0 * n + 2.0));
    }
    u[i] = acc;
  }

  if (!f.is_constant_zero()) {
    const int dim = static_cast<int>(A.rows());
    std::vector<Matrix> kernel(N + 1, Matrix::Zero(dim, dim));
    for (int m = 0; m <= N; ++m) {
      const double tau = grid.node(m);
      double e = 1.0;  // tau^{2n}/(2n+1)!
      for (int n = 0; n <= order; ++n) {
        kernel[m] += table->level_sum(n) * e;
        e *= tau * tau / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
      }
    }
    const ProductRule rule(2.0, grid);
    std::vector<Vector> fs;
    fs.reserve(N + 1);
    for (int i = 0; i <= N; ++i) fs.push_back(f(grid.node(i)));
    auto w = kernel_convolution(rule, kernel, fs);
    for (int i = 0; i <= N; ++i) u[i] += w[i];
  }
  return VectorTrajectory(grid, std::move(u));
}

VectorTrajectory solve_classical_permutable(const Matrix& A, const Matrix& B,
                                            const ForcingTerm& f,
                                            const Vector& x, const Vector& y,
                                            const TimeGrid& grid,
                                            const SeriesControl& ctl,
                                            const MLControl& ml) {
  return solve_permutable(FractionalOrder(2.0), A, B, f, x, y, grid, ctl, ml);
}

}  // namespace fracevo
