#pragma once

#include "fracevo/time_dependent.hpp"
#include "fracevo/types.hpp"

namespace fracevo {

// One initial value problem
//   D^alpha u = (A + B(t)) u + f(t),  u(0) = x,  u'(0) = y
// on a uniform grid; the common currency of the reference solvers.
struct IvpSpec {
  FractionalOrder alpha;
  Matrix A;
  TimeDependentOperator B;
  ForcingTerm f;
  Vector x;
  Vector y;
  TimeGrid grid;

  void validate() const;
  int dim() const { return static_cast<int>(A.rows()); }
};

// Fractional Adams-Bashforth-Moulton predictor-corrector (one PECE sweep per
// step) for the Volterra form u = x + t y + I^alpha[(A+B)u + f].  Product
// rectangle weights predict, product trapezoid weights correct; the weights
// reproduce polynomials of degree <= 1 exactly, so affine solutions are
// integrated without error.  Entirely independent of the Mittag-Leffler
// machinery.
VectorTrajectory adams_solve(const IvpSpec& spec);

// Discrete Caputo derivative of order alpha in (1,2] via cell-wise second
// differences against the exact g_{2-alpha} product weights.  The leading
// t^alpha behaviour of well-posed solutions is split off first (coefficients
// fitted from the first three samples) and differentiated in closed form, so
// the t^{alpha-2} singularity of u'' does not pollute interior nodes.  At
// alpha = 2 this degenerates to the standard second difference.
VectorTrajectory caputo_l1_derivative(const VectorTrajectory& u,
                                      FractionalOrder alpha);

// || D^alpha u - (A + B(t)) u - f(t) || per node; the universal acceptance
// metric for any candidate trajectory.  Endpoint entries are zero: the
// defect is measured at interior nodes only.
std::vector<double> residual(const VectorTrajectory& u, const IvpSpec& spec);

}  // namespace fracevo
