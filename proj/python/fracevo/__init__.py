"""Solvers for fractional evolution equations of order alpha in (1, 2].

The heavy lifting happens in the compiled extension: Mittag-Leffler
functions, the fractional cosine/sine/Riemann-Liouville operator families,
the perturbation-series solver for D^alpha u = (A + B(t)) u + f(t), the
closed-form solvers for constant operator pairs, and the Adams
predictor-corrector reference solver.
"""

from ._fracevo import (  # noqa: F401
    BoundViolation,
    DimensionMismatch,
    NonConvergence,
    NotPermutable,
    adams_solve,
    caputo_derivative,
    commutator,
    cosine_family,
    estimate_envelope,
    g_kernel,
    growth_bound_margins,
    ml_matrix,
    ml_scalar,
    q_table,
    residual,
    rl_family,
    rl_family_derivative,
    sine_family,
    solve_ivp,
    solve_nonpermutable,
    solve_permutable,
    variation_of_constants,
)

__version__ = "0.1.0"
