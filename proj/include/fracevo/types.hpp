#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "fracevo/errors.hpp"

namespace fracevo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fractional order alpha in (1, 2].  The two derived exponents show up as
// kernel powers throughout: alpha-1 in (0,1] and 2-alpha in [0,1).
class FractionalOrder {
 public:
  explicit FractionalOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 1.0) || !(alpha <= 2.0)) {
      throw ConfigError("fractional order must lie in (1, 2], got " +
                        std::to_string(alpha));
    }
  }

  double value() const { return alpha_; }
  double kernel_exponent() const { return alpha_ - 1.0; }   // weight of T_alpha
  double caputo_exponent() const { return 2.0 - alpha_; }   // weight of D^alpha
  bool is_classical() const { return alpha_ == 2.0; }

 private:
  double alpha_;
};

// Parameters of the two-parameter Mittag-Leffler function E_{alpha,beta}.
// The series converges for every argument as long as alpha > 0.
struct MLParams {
  double alpha;
  double beta;

  MLParams(double a, double b) : alpha(a), beta(b) {
    if (!(a > 0.0)) {
      throw ConfigError("Mittag-Leffler parameter alpha must be positive");
    }
  }
};

// Uniform grid t_i = i*T/N on [0, T].
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0)) throw ConfigError("grid horizon must be positive");
    if (steps < 1) throw ConfigError("grid needs at least one step");
  }

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  int nodes() const { return steps_ + 1; }
  double dt() const { return horizon_ / steps_; }
  double node(int i) const { return horizon_ * i / steps_; }

  bool operator==(const TimeGrid& other) const {
    return horizon_ == other.horizon_ && steps_ == other.steps_;
  }

 private:
  double horizon_;
  int steps_;
};

// One sample per grid node.  Values are vectors (solution trajectories) or
// matrices (operator-valued trajectories such as family samples).
template <class ValueType>
struct Trajectory {
  TimeGrid grid;
  std::vector<ValueType> values;

  // Empty placeholder, to be overwritten by assignment.
  Trajectory() : grid(1.0, 1), values(2, ValueType()) {}

  Trajectory(TimeGrid g, std::vector<ValueType> v)
      : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.nodes()) {
      throw DimensionMismatch("trajectory needs one value per grid node");
    }
    for (const auto& value : values) {
      if (!value.allFinite()) {
        throw NonConvergence("trajectory carries non-finite entries");
      }
    }
  }
};

using VectorTrajectory = Trajectory<Vector>;
using OperatorTrajectory = Trajectory<Matrix>;

// Exponential envelope ||C_alpha(t;A)|| <= M e^{omega t}.  M >= 1 because
// C_alpha(0;A) = I.  The property is certified against samples, not assumed.
struct GrowthEnvelope {
  double M = 1.0;
  double omega = 0.0;
};

// Truncation control for the perturbation series.  K_t dominates sup
// max(||B(s)||, ||B'(s)||) over the grid and N_t the same for the forcing;
// both feed the a-priori term bounds that certify the remainder.
struct SeriesControl {
  double tol = 1e-12;
  int max_terms = 64;
  GrowthEnvelope envelope;
  double K_t = 0.0;
  double N_t = 0.0;
};

}  // namespace fracevo
