"""Gaussian quadrature-based moment closures for kinetic equations.

Core surface:

- moments: realizability checks, Gauss quadrature from moments, Gaussian
  and truncated-Gaussian moment tools.
- eqmom1d: two-node (and N-node) Gaussian mixture inversion with the
  separation limiter, Gauss-Hermite integral machinery.
- ecqmom2d: four-node conditional reconstruction of the 16-moment set.
- kinetic_flux: analytic half-moment split fluxes and CFL speeds.
- solver: realizable finite-volume transport plus exact Stokes drag.
- cases: the two-stream Riemann problem and the frozen-turbulence
  Lagrangian/Eulerian comparison.
"""

from .ecqmom2d import (INDEX_2D, BivariateMoments, Ecqmom2DParams,
                       evaluate_all_2d, evaluate_moments_2d, invert_2d,
                       regress_V)
from .eqmom1d import (Eqmom1DParams, GaussHermiteRule, LimiterConfig,
                      dual_quadrature_1d, evaluate_moments, gauss_hermite,
                      invert_n_node, invert_two_node, kernel_integral_1d,
                      kernel_integral_1d_pair, sigma2_analytic,
                      sigma2_limited)
from .errors import (ConfigError, DomainError, RealizabilityError, StepError,
                     VacuumError)
from .kinetic_flux import (flux_1d, flux_2d_x, flux_2d_y, half_moments_1d,
                           max_speed_1d, max_speed_2d, verify_conjecture_c)
from .moments import (CentralInvariants, DiracQuadrature, adaptive_wheeler,
                      central_invariants, gaussian_moments, hankel_realizable,
                      truncated_gaussian_quadrature, wheeler_quadrature)
from .solver import (DragConfig, SolverState1D, SolverState2D,
                     hyperbolicity_audit_1d, hyperbolicity_audit_2d,
                     realizability_sweep, run_1d, run_2d)

__version__ = "0.1.0"

__all__ = [
    "BivariateMoments", "CentralInvariants", "ConfigError", "DiracQuadrature",
    "DomainError", "DragConfig", "Ecqmom2DParams", "Eqmom1DParams",
    "GaussHermiteRule", "INDEX_2D", "LimiterConfig", "RealizabilityError",
    "SolverState1D", "SolverState2D", "StepError", "VacuumError",
    "adaptive_wheeler", "central_invariants", "dual_quadrature_1d",
    "evaluate_all_2d", "evaluate_moments", "evaluate_moments_2d",
    "flux_1d", "flux_2d_x", "flux_2d_y", "gauss_hermite", "gaussian_moments",
    "half_moments_1d", "hankel_realizable", "hyperbolicity_audit_1d",
    "hyperbolicity_audit_2d", "invert_2d", "invert_n_node", "invert_two_node",
    "kernel_integral_1d", "kernel_integral_1d_pair", "max_speed_1d",
    "max_speed_2d", "realizability_sweep", "regress_V", "run_1d", "run_2d",
    "sigma2_analytic", "sigma2_limited", "truncated_gaussian_quadrature",
    "verify_conjecture_c", "wheeler_quadrature",
]
