"""Analytic half-moment kinetic fluxes and the CFL speed bound.

The finite-volume flux of moment k is the kinetic flux of v**(k+1) split
into positive- and negative-going parts,

    F_k = sum_a rho_a ( <v**(k+1)>_a^+ + <v**(k+1)>_a^- ),

with the half moments of each Gaussian node computed from erfc-seeded
upward recursions.  Each side is seeded with its own tail probability, so
no complementary subtraction of nearly equal quantities ever occurs.

The admissible time step follows the support bound of the three-node
quadratures hiding inside the update: no signal moves faster than
|v_a| + 1.8*sqrt(2)*sigma per node (the 1.8 is the largest abscissa of the
half-line Gauss rule at threshold zero, checked by ``verify_conjecture_c``).
"""

import math
from dataclasses import dataclass

import numpy as np

from .ecqmom2d import INDEX_2D, PERM_2D, conditional_central_moments
from .moments import truncated_gaussian_quadrature

# Per-node signal speed margin carried by the Gaussian tails.
TAIL_FACTOR = 1.8 * math.sqrt(2.0)

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _phi(x):
    return math.exp(-0.5 * x * x) / _SQRT2PI


def _cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _positive_half(v_a, sigma, imax):
    """Integrals of v**i over (0, inf) against N(v; v_a, sigma**2)."""
    out = np.empty(imax + 1)
    if sigma == 0.0:
        if v_a > 0.0:
            out[:] = v_a ** np.arange(imax + 1)
        elif v_a < 0.0:
            out[:] = 0.0
        else:
            out[:] = 0.0
            out[0] = 0.5
        return out
    xi = v_a / sigma
    out[0] = _cdf(xi)
    if imax >= 1:
        out[1] = v_a * out[0] + sigma * _phi(xi)
    s2 = sigma * sigma
    for k in range(2, imax + 1):
        out[k] = v_a * out[k - 1] + (k - 1) * s2 * out[k - 2]
    return out


def half_moments_1d(v_a, sigma, imax):
    """Half-line moments of one Gaussian node.

    Returns (plus, minus): the integrals of v**i over (0, inf) and
    (-inf, 0) for i = 0..imax.  Their sum is the full Gaussian moment
    (partition identity).
    """
    plus = _positive_half(v_a, sigma, imax)
    mirror = _positive_half(-v_a, sigma, imax)
    signs = (-1.0) ** np.arange(imax + 1)
    return plus, signs * mirror


def flux_1d(p, kmax=4):
    """Split kinetic flux of a 1-D reconstruction.

    Returns (f_plus, f_minus) with components i = 0..kmax; f_plus leaves
    through the right face of the owning cell, f_minus enters from it.
    Their sum is the full flux (the reconstruction's moments shifted by
    one order).
    """
    f_plus = np.zeros(kmax + 1)
    f_minus = np.zeros(kmax + 1)
    for rho, v_a in zip(p.rho, p.v):
        if rho == 0.0:
            continue
        plus, minus = half_moments_1d(v_a, p.sigma, kmax + 1)
        f_plus += rho * plus[1:]
        f_minus += rho * minus[1:]
    return f_plus, f_minus


def _half_uv_tables(p, nmax, jmax):
    """Half-line tables <u**n V**j>_a^{+,-} for each active outer node.

    Returns (plus, minus) of shape (2, nmax+1, jmax+1); inactive nodes are
    zero-filled.
    """
    plus = np.zeros((2, nmax + 1, jmax + 1))
    minus = np.zeros((2, nmax + 1, jmax + 1))
    a0p = p.a0 ** np.arange(jmax + 1)
    a1p = p.a1 ** np.arange(jmax + 1)
    for al in range(2):
        if p.rho[al] == 0.0:
            continue
        hp, hm = half_moments_1d(p.u[al], p.sigma1, nmax + jmax)
        for n in range(nmax + 1):
            for j in range(jmax + 1):
                accp = accm = 0.0
                for k in range(j + 1):
                    c = math.comb(j, k) * a0p[j - k] * a1p[k]
                    accp += c * hp[n + k]
                    accm += c * hm[n + k]
                plus[al, n, j] = accp
                minus[al, n, j] = accm
    return plus, minus


def flux_2d_x(p):
    """Split x-direction kinetic flux of a conditional reconstruction.

    Components follow the canonical 16-moment order; entry k carries the
    flux of u**(i+1) v**j for (i, j) = INDEX_2D[k].
    """
    f_plus = np.zeros(16)
    f_minus = np.zeros(16)
    if p.mode == "vacuum" or p.n_active == 0:
        return f_plus, f_minus
    up, um = _half_uv_tables(p, 5, 4)
    mu = conditional_central_moments(p, 4)
    for k, (i, j) in enumerate(INDEX_2D):
        accp = accm = 0.0
        for al in range(2):
            if p.rho[al] == 0.0:
                continue
            sp = sm = 0.0
            for j1 in range(j + 1):
                c = math.comb(j, j1) * mu[al, j1]
                sp += c * up[al, i + 1, j - j1]
                sm += c * um[al, i + 1, j - j1]
            accp += p.rho[al] * sp
            accm += p.rho[al] * sm
        f_plus[k] = accp
        f_minus[k] = accm
    return f_plus, f_minus


def flux_2d_y(p_swapped):
    """Split y-direction flux, computed from the reconstruction of the
    u<->v swapped moments and mapped back to canonical component order."""
    f_plus, f_minus = flux_2d_x(p_swapped)
    return f_plus[PERM_2D], f_minus[PERM_2D]


def max_speed_1d(p):
    """CFL speed of a 1-D reconstruction: max_a |v_a| + 1.8*sqrt(2)*sigma."""
    speed = 0.0
    for rho, v_a in zip(p.rho, p.v):
        if rho > 0.0:
            speed = max(speed, abs(v_a) + TAIL_FACTOR * p.sigma)
    return speed


def max_speed_2d(p):
    """CFL speeds (x, y) of a conditional reconstruction.

    The x speed is the 1-D bound on the outer nodes.  The y bound has no
    counterpart theorem; it conservatively envelopes the conditional
    support: |v_ab| + |V| over the u support + 1.8*sqrt(2)*sigma2_a.
    """
    if p.n_active == 0:
        return 0.0, 0.0
    sx = 0.0
    u_env = 0.0
    for al in range(2):
        if p.rho[al] > 0.0:
            sx = max(sx, abs(p.u[al]) + TAIL_FACTOR * p.sigma1)
            u_env = max(u_env, abs(p.u[al]) + TAIL_FACTOR * p.sigma1)
    sy = 0.0
    for al in range(2):
        if p.rho[al] == 0.0:
            continue
        for be in range(2):
            if p.rho_in[al, be] > 0.0:
                sy = max(sy, abs(p.v_in[al, be]) + abs(p.a0)
                         + abs(p.a1) * u_env + TAIL_FACTOR * p.sigma2[al])
    return sx, sy


def cfl_dt(max_speed, dx, cfl_number, dt_max=np.inf):
    """Admissible step from a grid-wide maximum signal speed."""
    if not 0.0 < cfl_number <= 1.0:
        raise ValueError("cfl_number must lie in (0, 1]")
    if max_speed <= 0.0:
        return dt_max
    return min(cfl_number * dx / max_speed, dt_max)


@dataclass(frozen=True)
class ConjectureCReport:
    """Result of the truncated-quadrature abscissa bound sweep."""

    lam: np.ndarray
    max_abs_node: np.ndarray
    bound: np.ndarray
    u0_max: float
    violations: np.ndarray
    min_slack: float

    @property
    def ok(self):
        return len(self.violations) == 0 and self.u0_max <= 1.8


def verify_conjecture_c(lam_grid=None):
    """Sweep the bound |u_{lam,a}| <= max_a u_{0,a} + max(0, lam) on the
    abscissas of the three-node truncated-Gaussian quadrature, and check
    max_a u_{0,a} <= 1.8.
    """
    if lam_grid is None:
        lam_grid = np.arange(-10.0, 10.0 + 1e-12, 0.01)
    lam_grid = np.asarray(lam_grid, dtype=float)
    u0_max = float(np.max(truncated_gaussian_quadrature(0.0).abscissas))
    max_abs = np.empty(len(lam_grid))
    for k, lam in enumerate(lam_grid):
        quad = truncated_gaussian_quadrature(lam)
        max_abs[k] = float(np.max(np.abs(quad.abscissas)))
    bound = u0_max + np.maximum(lam_grid, 0.0)
    slack = bound - max_abs
    violations = lam_grid[slack < 0.0]
    return ConjectureCReport(lam=lam_grid, max_abs_node=max_abs, bound=bound,
                             u0_max=u0_max, violations=violations,
                             min_slack=float(np.min(slack)))
