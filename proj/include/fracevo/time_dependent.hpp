#pragma once

#include <cmath>
#include <vector>

#include "fracevo/types.hpp"

namespace fracevo {

namespace detail {

template <class Value>
struct ValueOps;

template <>
struct ValueOps<Matrix> {
  static Matrix zero(int dim) { return Matrix::Zero(dim, dim); }
  static int dim(const Matrix& v) { return static_cast<int>(v.rows()); }
  static bool square_ok(const Matrix& v) { return v.rows() == v.cols(); }
};

template <>
struct ValueOps<Vector> {
  static Vector zero(int dim) { return Vector::Zero(dim); }
  static int dim(const Vector& v) { return static_cast<int>(v.size()); }
  static bool square_ok(const Vector&) { return true; }
};

}  // namespace detail

// Evaluable map t -> value with an evaluable derivative, covering the three
// coefficient kinds a problem description can carry.  Tabulated samples are
// interpolated linearly; their derivative uses central differences with
// one-sided second-order stencils at the endpoints, so it is reproducible
// from the samples alone.
template <class Value>
class TimeDependentMap {
 public:
  enum class Kind { constant, polynomial, tabulated };

  static TimeDependentMap constant(Value v) {
    check(v);
    TimeDependentMap m;
    m.kind_ = Kind::constant;
    m.coefficients_ = {std::move(v)};
    return m;
  }

  static TimeDependentMap zero(int dim) {
    return constant(detail::ValueOps<Value>::zero(dim));
  }

  // value(t) = sum_k coefficients[k] t^k
  static TimeDependentMap polynomial(std::vector<Value> coefficients) {
    if (coefficients.empty()) {
      throw ConfigError("polynomial coefficient list must not be empty");
    }
    for (const auto& c : coefficients) {
      check(c);
      if (detail::ValueOps<Value>::dim(c) !=
          detail::ValueOps<Value>::dim(coefficients.front())) {
        throw DimensionMismatch(
            "polynomial coefficients must share one dimension");
      }
    }
    TimeDependentMap m;
    m.kind_ = coefficients.size() == 1 ? Kind::constant : Kind::polynomial;
    m.coefficients_ = std::move(coefficients);
    return m;
  }

  static TimeDependentMap tabulated(Trajectory<Value> samples) {
    for (const auto& v : samples.values) check(v);
    TimeDependentMap m;
    m.kind_ = Kind::tabulated;
    m.samples_ = std::move(samples.values);
    m.grid_horizon_ = samples.grid.horizon();
    m.grid_steps_ = samples.grid.steps();
    m.node_derivatives_ = finite_differences(m.samples_, samples.grid.dt());
    return m;
  }

  Kind kind() const { return kind_; }

  int dim() const {
    const Value& v =
        kind_ == Kind::tabulated ? samples_.front() : coefficients_.front();
    return detail::ValueOps<Value>::dim(v);
  }

  Value operator()(double t) const {
    if (kind_ == Kind::tabulated) return interpolate(samples_, t);
    Value acc = coefficients_.back();
    for (auto it = coefficients_.rbegin() + 1; it != coefficients_.rend(); ++it) {
      acc = *it + t * acc;
    }
    return acc;
  }

  Value derivative(double t) const {
    if (kind_ == Kind::constant) {
      return detail::ValueOps<Value>::zero(dim());
    }
    if (kind_ == Kind::tabulated) return interpolate(node_derivatives_, t);
    Value acc = detail::ValueOps<Value>::zero(dim());
    for (int k = static_cast<int>(coefficients_.size()) - 1; k >= 1; --k) {
      acc = static_cast<double>(k) * coefficients_[k] + t * acc;
    }
    return acc;
  }

  bool is_constant_zero() const {
    return kind_ == Kind::constant && coefficients_.front().isZero(0.0);
  }

 private:
  TimeDependentMap() = default;

  static void check(const Value& v) {
    if (!detail::ValueOps<Value>::square_ok(v)) {
      throw DimensionMismatch("time-dependent operator must be square");
    }
    if (!v.allFinite()) {
      throw ConfigError("time-dependent coefficient has non-finite entries");
    }
  }

  static std::vector<Value> finite_differences(const std::vector<Value>& s,
                                               double h) {
    const int n = static_cast<int>(s.size());
    std::vector<Value> d(n, detail::ValueOps<Value>::zero(0));
    if (n < 3) {
      throw GridTooCoarse("tabulated coefficients need at least 3 samples");
    }
    d[0] = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h);
    for (int i = 1; i + 1 < n; ++i) d[i] = (s[i + 1] - s[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * h);
    return d;
  }

  Value interpolate(const std::vector<Value>& s, double t) const {
    const double h = grid_horizon_ / grid_steps_;
    if (t <= 0.0) return s.front();
    if (t >= grid_horizon_) return s.back();
    const int j = std::min(static_cast<int>(t / h), grid_steps_ - 1);
    const double w = (t - j * h) / h;
    return (1.0 - w) * s[j] + w * s[j + 1];
  }

  Kind kind_ = Kind::constant;
  std::vector<Value> coefficients_;      // constant / polynomial
  std::vector<Value> samples_;           // tabulated
  std::vector<Value> node_derivatives_;  // tabulated
  double grid_horizon_ = 1.0;
  int grid_steps_ = 1;
};

using TimeDependentOperator = TimeDependentMap<Matrix>;
using ForcingTerm = TimeDependentMap<Vector>;

}  // namespace fracevo
