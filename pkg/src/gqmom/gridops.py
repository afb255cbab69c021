"""Batched (per-cell vectorized) kernels for the finite-volume solvers.

Everything here mirrors the scalar routines in ``eqmom1d``, ``ecqmom2d``
and ``kinetic_flux`` but operates on arrays with one row per grid cell, so
a full sweep costs a few hundred numpy operations instead of a Python loop
over cells.  The scalar implementations remain the reference; agreement is
enforced by tests.

Mode codes: 0 vacuum, 1 single node, 2 two Gaussian nodes, 3 sigma = 0
Dirac pair (moment vectors on or outside the closed-form region).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from . import _kernels as _k
from .ecqmom2d import IDX_U, INDEX_2D, LOOKUP_2D, PERM_2D
from .kinetic_flux import TAIL_FACTOR
from .moments import VACUUM_EPS

MODE_VACUUM = 0
MODE_SINGLE = 1
MODE_TWO = 2
MODE_DIRAC = 3

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass
class TwoNodeGrid:
    """Per-cell 1-D reconstruction arrays."""

    rho: np.ndarray     # (n, 2)
    v: np.ndarray       # (n, 2)
    sigma: np.ndarray   # (n,)
    mode: np.ndarray    # (n,) uint8
    limited: np.ndarray  # (n,) bool

    @property
    def n_cells(self):
        return len(self.sigma)


def central_arrays(m):
    """Vectorized central invariants (e, q, k4, mean) of rows of M_0..M_4.

    Rows with m0 <= 0 come back zero-filled; callers mask them first.
    """
    m = np.asarray(m, dtype=float)
    m0, m1, m2, m3, m4 = (m[:, k] for k in range(5))
    safe = np.where(m0 > 0.0, m0, 1.0)
    mean = np.where(m0 > 0.0, m1 / safe, 0.0)
    e = (m0 * m2 - m1 * m1) / safe**2
    q = (m3 * m0**2 - 3.0 * m0 * m1 * m2 + 2.0 * m1**3) / safe**3
    k4 = (m4 * m0**3 - 4.0 * m0**2 * m1 * m3 - 3.0 * m0**2 * m2**2
          + 12.0 * m0 * m1**2 * m2 - 6.0 * m1**4) / safe**4
    zero = m0 <= 0.0
    for arr in (mean, e, q, k4):
        arr[zero] = 0.0
    return e, q, k4, mean


def invert_two_node_grid(m, du_lim=None, du_max=None, vacuum_eps=VACUUM_EPS):
    """Vectorized two-node inversion of an (n, 5) moment array.

    The limiter (and the separation cap for vectors it cannot fix) is
    enabled by passing both du_lim and du_max.  Per-cell branch logic
    matches ``eqmom1d.invert_two_node``.
    """
    m = np.ascontiguousarray(np.asarray(m, dtype=float))
    use = du_lim is not None and du_max is not None
    rho, v, sigma, mode, limited = _k.two_node_cells(
        m, use, du_lim if use else 0.0, du_max if use else 1.0, vacuum_eps)
    return TwoNodeGrid(rho=rho, v=v, sigma=sigma, mode=mode, limited=limited)


def half_moments_grid(v, sigma, imax):
    """Vectorized half-line Gaussian moments.

    v and sigma broadcast together; returns (plus, minus) with one extra
    trailing axis of length imax+1.
    """
    v = np.asarray(v, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), v.shape)

    def one_side(va):
        pos = sigma > 0.0
        xi = np.where(pos, va / np.where(pos, sigma, 1.0),
                      np.where(va > 0.0, np.inf,
                               np.where(va < 0.0, -np.inf, 0.0)))
        out = np.empty(va.shape + (imax + 1,))
        out[..., 0] = 0.5 * erfc(-xi / math.sqrt(2.0))
        phi = np.exp(-0.5 * np.where(np.isfinite(xi), xi, 0.0) ** 2) / _SQRT2PI
        phi = np.where(np.isfinite(xi), phi, 0.0)
        if imax >= 1:
            out[..., 1] = va * out[..., 0] + sigma * phi
        s2 = sigma * sigma
        for k in range(2, imax + 1):
            out[..., k] = va * out[..., k - 1] + (k - 1) * s2 * out[..., k - 2]
        return out

    plus = one_side(v)
    minus = one_side(-v) * (-1.0) ** np.arange(imax + 1)
    return plus, minus


def flux_1d_grid(g, kmax=4):
    """Split kinetic fluxes of a TwoNodeGrid: arrays (n, kmax+1)."""
    plus, minus = half_moments_grid(g.v, g.sigma[:, None], kmax + 1)
    active = (g.rho > 0.0).astype(float)
    w = g.rho * active
    f_plus = np.einsum("na,nak->nk", w, plus[..., 1:])
    f_minus = np.einsum("na,nak->nk", w, minus[..., 1:])
    return f_plus, f_minus


def speed_1d_grid(g):
    """Per-cell CFL speeds max_a |v_a| + 1.8*sqrt(2)*sigma."""
    s = (np.abs(g.v) + TAIL_FACTOR * g.sigma[:, None])
    s = np.where(g.rho > 0.0, s, 0.0)
    return s.max(axis=1)


def hankel_ok_grid(m, tol=1e-10):
    """Vectorized Hankel realizability of rows of M_0..M_4.

    Returns (ok, worst) where worst is the most negative normalized
    determinant over the grid (for diagnostics).
    """
    m = np.asarray(m, dtype=float)
    m0 = m[:, 0]
    vac = m0 <= 0.0
    safe = np.where(vac, 1.0, m0)
    mean = m[:, 1] / safe
    u2 = np.maximum(m[:, 2] / safe, mean * mean)
    u2 = np.where(u2 > 0.0, u2, 1.0)
    mh = [m[:, k] / (safe * u2 ** (0.5 * k)) for k in range(5)]
    h2 = mh[2] - mh[1] ** 2
    h4 = (mh[2] * mh[4] - mh[3] ** 2
          - mh[1] * (mh[1] * mh[4] - mh[3] * mh[2])
          + mh[2] * (mh[1] * mh[3] - mh[2] ** 2))
    scale = np.max(np.abs(m), axis=1)
    ok_live = (h2 >= -tol) & (h4 >= -tol) & (m0 > 0.0)
    # Rows without mass are realizable only if the whole row vanishes.
    ok_vac = np.all(np.abs(m) <= tol * np.maximum(scale[:, None], 1.0), axis=1)
    ok = np.where(vac, ok_vac, ok_live)
    worst = float(np.min(np.where(vac, 0.0, np.minimum(h2, h4)), initial=0.0))
    return ok.astype(bool), worst


@dataclass
class CondGrid:
    """Per-cell conditional (2-D) reconstruction arrays."""

    rho: np.ndarray      # (n, 2)
    u: np.ndarray        # (n, 2)
    sigma1: np.ndarray   # (n,)
    a0: np.ndarray       # (n,)
    a1: np.ndarray       # (n,)
    rho_in: np.ndarray   # (n, 2, 2)
    v_in: np.ndarray     # (n, 2, 2)
    sigma2: np.ndarray   # (n, 2)
    mode: np.ndarray     # (n,) uint8 (outer mode code)
    counters: dict = field(default_factory=dict)

    @property
    def n_cells(self):
        return len(self.sigma1)


def _gauss_powers_grid(mean, sigma, kmax):
    """Gaussian raw moments 0..kmax along a trailing axis."""
    out = np.empty(mean.shape + (kmax + 1,))
    out[..., 0] = 1.0
    if kmax >= 1:
        out[..., 1] = mean
    s2 = sigma * sigma
    for k in range(2, kmax + 1):
        out[..., k] = mean * out[..., k - 1] + (k - 1) * s2 * out[..., k - 2]
    return out


def _uv_tables_grid(g_pow, a0, a1, imax, jmax):
    """<u**i V**j> tables from Gaussian power tables.

    g_pow: (..., imax+jmax+1);  returns a nested list uv[i][j] of
    contiguous arrays (one per table entry, cheap to combine downstream).
    """
    gp = [np.ascontiguousarray(g_pow[..., k]) for k in range(g_pow.shape[-1])]
    a0p = [a0**k for k in range(jmax + 1)]
    a1p = [a1**k for k in range(jmax + 1)]
    out = []
    for i in range(imax + 1):
        row = []
        for j in range(jmax + 1):
            acc = math.comb(j, 0) * a0p[j] * gp[i]
            for k in range(1, j + 1):
                acc = acc + (math.comb(j, k) * a0p[j - k] * a1p[k] * gp[i + k])
            row.append(acc)
        out.append(row)
    return out


def invert_2d_grid(m, du_lim=None, du_max=None, du_lim_in=None, du_max_in=None,
                   vacuum_eps=VACUUM_EPS, pivot_tol=1e-12):
    """Vectorized conditional inversion of an (n, 16) canonical moment array.

    Mirrors ``ecqmom2d.invert_2d``: outer 1-D inversion of the u-marginal,
    linear conditional-mean fit, sequential 2x2 systems for the conditional
    moments, inner 1-D inversions.  Degenerate cells (single outer node or
    vanishing pivot) carry the whole u-marginal in one Gaussian; their
    parameters are stored with rho = (M00, 0) and duplicated inner rows so
    downstream evaluation never branches.
    """
    m = np.ascontiguousarray(np.asarray(m, dtype=float))
    use = du_lim is not None and du_max is not None
    use_in = du_lim_in is not None and du_max_in is not None
    (rho, u, sigma1, a0, a1, rho_in, v_in, sigma2, mode, limited,
     flags) = _k.cond_invert_cells(
        m, use, du_lim if use else 0.0, du_max if use else 1.0,
        use_in, du_lim_in if use_in else 0.0, du_max_in if use_in else 1.0,
        vacuum_eps, pivot_tol)
    counters = {
        "outer_dirac": int(np.sum(mode == MODE_DIRAC)),
        "outer_limited": int(np.sum(limited)),
        "flat_V": int(np.sum(flags & _k.FLAG_FLAT_V > 0)),
        "degenerate": int(np.sum(mode == MODE_SINGLE)),
        "pivot_degraded": int(np.sum(flags & _k.FLAG_PIVOT > 0)),
        "inner_bad": int(np.sum(flags & _k.FLAG_INNER_BAD > 0)),
        "inner_dirac": int(np.sum(flags & _k.FLAG_INNER_DIRAC > 0)),
    }
    return CondGrid(rho=rho, u=u, sigma1=sigma1, a0=a0, a1=a1,
                    rho_in=rho_in, v_in=v_in, sigma2=sigma2, mode=mode,
                    counters=counters)


def conditional_moments_grid(g, jmax):
    """Inner central moments mu_a^j, shape (n, 2, jmax+1)."""
    pow_v = _gauss_powers_grid(g.v_in, g.sigma2[:, :, None], jmax)
    return np.einsum("nab,nabj->naj", g.rho_in, pow_v)


def evaluate_2d_grid(g):
    """All 16 canonical moments of each cell's reconstruction: (n, 16)."""
    n = g.n_cells
    g_pow = _gauss_powers_grid(g.u, g.sigma1[:, None], 8)
    uv = _uv_tables_grid(g_pow, g.a0[:, None], g.a1[:, None], 4, 4)
    mu = conditional_moments_grid(g, 4)
    mu_l = [np.ascontiguousarray(mu[:, :, j]) for j in range(5)]
    out = np.zeros((n, 16))
    active = (g.rho > 0.0).astype(float) * g.rho
    for k, (i, j) in enumerate(INDEX_2D):
        acc = uv[i][j] * mu_l[0]
        for j1 in range(1, j + 1):
            acc = acc + math.comb(j, j1) * uv[i][j - j1] * mu_l[j1]
        out[:, k] = np.sum(active * acc, axis=1)
    return out


def flux_2d_x_grid(g):
    """Split x-direction kinetic fluxes of a CondGrid: arrays (n, 16)."""
    return _k.flux16_cells(g.rho, g.u, g.sigma1, g.a0, g.a1,
                           g.rho_in, g.v_in, g.sigma2)


def flux_2d_x_weighted_grid(g, rho_r, rho_l):
    """Split x-fluxes with face-extrapolated outer weights: arrays (n, 16)."""
    return _k.flux16_weighted_cells(g.rho, g.u, g.sigma1, g.a0, g.a1,
                                    g.rho_in, g.v_in, g.sigma2,
                                    np.ascontiguousarray(rho_r),
                                    np.ascontiguousarray(rho_l))


def speed_2d_grid(g):
    """Per-cell CFL speed pairs (sx, sy) of a CondGrid."""
    return _k.speed2d_cells(g.rho, g.u, g.sigma1, g.a0, g.a1,
                            g.rho_in, g.v_in, g.sigma2, TAIL_FACTOR)


def drag_exact_1d(m, u_g, decay):
    """Exact affine-drag update of (n, 5) moments over one step.

    decay = exp(-dt/tau); the update is the pushforward of the measure
    under v -> u_g + (v - u_g)*decay, which closes on the moments.
    """
    m = np.ascontiguousarray(np.asarray(m, dtype=float))
    u_g = np.ascontiguousarray(np.broadcast_to(np.asarray(u_g, dtype=float),
                                               m.shape[:1]))
    return _k.drag5_cells(m, u_g, decay)


def drag_exact_2d(m, u_g, v_g, decay):
    """Exact affine-drag update of (n, 16) canonical moments."""
    m = np.ascontiguousarray(np.asarray(m, dtype=float))
    u_g = np.ascontiguousarray(np.asarray(u_g, dtype=float))
    v_g = np.ascontiguousarray(np.asarray(v_g, dtype=float))
    return _k.drag16_cells(m, u_g, v_g, decay)
