#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "fracevo/perturb.hpp"
#include "fracevo/types.hpp"

namespace fracevo {

struct CommutatorResult {
  Matrix value;
  bool is_zero = false;
};

// [A, B] = AB - BA together with a relative smallness verdict
// ||AB - BA|| <= tol ||A|| ||B||.
CommutatorResult commutator(const Matrix& A, const Matrix& B,
                            double tol = 1e-12);

// The non-commutative word sums generated by the resolvent factorization of
// (lambda^alpha - A - B)^{-1}:
//   Q_{k,0} = A^k,  Q_{0,m} = B^m,
//   Q_{k,m} = sum_{l=0}^{k} A^{k-l} B Q_{l,m-1}.
// For commuting A, B they collapse to binom(k+m, m) A^k B^m.
class QTable {
 public:
  QTable(const Matrix& A, const Matrix& B, int order);

  int order() const { return order_; }
  int dim() const { return static_cast<int>(A_.rows()); }
  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }

  // Q_{k,m}, valid for k + m <= order().
  const Matrix& at(int k, int m) const;

  // sum_{k+m=n} Q_{k,m}; equals (A+B)^n in the commuting case.
  const Matrix& level_sum(int n) const;

  void extend(int order);

 private:
  void build(int from_order);
  int index(int k, int m) const;

  Matrix A_, B_;
  int order_ = -1;
  std::vector<Matrix> entries_;     // triangular layout over k+m <= order
  std::vector<Matrix> level_sums_;  // per n
};

QTable q_table(const Matrix& A, const Matrix& B, int order);

// Content-addressed cache of Q tables; tables grow on demand and are shared
// between solver calls on the same operator pair.  Single writer, many
// readers.
class QTableCache {
 public:
  std::shared_ptr<const QTable> get(const Matrix& A, const Matrix& B,
                                    int order);
  std::size_t size() const;

 private:
  static std::uint64_t pair_hash(const Matrix& A, const Matrix& B);

  mutable std::shared_mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const QTable>> tables_;
};

QTableCache& global_q_cache();

// Number of word-sum levels needed so the geometric-over-factorial term
// bound (||A||+||B||)^n t^{n alpha}/Gamma(n alpha + 1) certifies a remainder
// below tol on [0, T].
int word_series_order(double operator_scale, double alpha, double T,
                      double tol, int max_terms);

// Explicit solution for constant operators with arbitrary commutator: three
// word-sum series in t^{n alpha} for the x, y and forcing channels, with the
// forcing channel convolved by the product rule.
VectorTrajectory solve_nonpermutable(FractionalOrder alpha, const Matrix& A,
                                     const Matrix& B, const ForcingTerm& f,
                                     const Vector& x, const Vector& y,
                                     const TimeGrid& grid,
                                     const SeriesControl& ctl);

// Commuting-pair closed form through Mittag-Leffler functions of A + B;
// throws NotPermutable when the commutator check fails.
VectorTrajectory solve_permutable(FractionalOrder alpha, const Matrix& A,
                                  const Matrix& B, const ForcingTerm& f,
                                  const Vector& x, const Vector& y,
                                  const TimeGrid& grid,
                                  const SeriesControl& ctl,
                                  const MLControl& ml = {});

// Second-order (alpha = 2) specializations: Gamma(2n+1) = (2n)! and
// Gamma(2n+2) = (2n+1)!.  Agrees with the fractional solvers at alpha = 2 up
// to roundoff.
VectorTrajectory solve_classical_nonpermutable(const Matrix& A, const Matrix& B,
                                               const ForcingTerm& f,
                                               const Vector& x, const Vector& y,
                                               const TimeGrid& grid,
                                               const SeriesControl& ctl);

// Evaluated without matrix square roots: E_{2,1}((A+B)t^2) and
// t E_{2,2}((A+B)t^2) are entire in A + B and reduce to cos/sin of
// sqrt(-(A+B)) t where the latter exists.
VectorTrajectory solve_classical_permutable(const Matrix& A, const Matrix& B,
                                            const ForcingTerm& f,
                                            const Vector& x, const Vector& y,
                                            const TimeGrid& grid,
                                            const SeriesControl& ctl,
                                            const MLControl& ml = {});

}  // namespace fracevo
