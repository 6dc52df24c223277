#pragma once

#include "fracevo/special.hpp"
#include "fracevo/types.hpp"

namespace fracevo {

// Spectral norm (largest singular value); the operator norm used in every
// growth estimate.
double operator_norm(const Matrix& A);

// max Re(lambda) over the spectrum of A.
double spectral_abscissa(const Matrix& A);

// Fractional cosine family of a bounded operator, C_alpha(t;A) =
// E_{alpha,1}(A t^alpha).  Solves the homogeneous problem for the position
// initial datum; C_alpha(0;A) = I.
Matrix cosine_family(FractionalOrder alpha, const Matrix& A, double t,
                     const MLControl& ctl = {});

// Time integral of the cosine family, S_alpha(t;A) = t E_{alpha,2}(A t^alpha);
// propagates the velocity initial datum.
Matrix sine_family(FractionalOrder alpha, const Matrix& A, double t,
                   const MLControl& ctl = {});

// Riemann-Liouville family T_alpha(t;A) = I^{alpha-1} C_alpha(t;A) =
// t^{alpha-1} E_{alpha,alpha}(A t^alpha); the Duhamel convolution kernel.
// Coincides with the sine family at alpha = 2; vanishes at t = 0.
Matrix rl_family(FractionalOrder alpha, const Matrix& A, double t,
                 const MLControl& ctl = {});

// d/dt T_alpha(t;A) = t^{alpha-2} E_{alpha,alpha-1}(A t^alpha), equivalently
// the convolution form g_{alpha-1} * (A T_alpha) + g_{alpha-1}(t) I.
// Singular at t = 0 for alpha < 2, hence the t > 0 precondition.
Matrix rl_family_derivative(FractionalOrder alpha, const Matrix& A, double t,
                            const MLControl& ctl = {});

// Fit (M, omega) from cosine-family samples on the grid: omega from the
// spectral abscissa of A (the exponential rate of E_alpha along its dominant
// eigenvalue), then the smallest M >= 1 making the envelope hold at every
// node.  The result is certified on the sampled grid by construction.
GrowthEnvelope estimate_envelope(FractionalOrder alpha, const Matrix& A,
                                 const TimeGrid& grid,
                                 const MLControl& ctl = {});

// True when ||C_alpha(t_i;A)|| <= M e^{omega t_i} at every node.
bool envelope_certified(const GrowthEnvelope& env, FractionalOrder alpha,
                        const Matrix& A, const TimeGrid& grid,
                        const MLControl& ctl = {});

}  // namespace fracevo
