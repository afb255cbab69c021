"""Two-node (and N-node) Gaussian mixture reconstruction from 1-D moments.

A reconstruction is a sum of N Gaussians sharing one spread sigma:

    f(v) = sum_a rho_a * N(v; v_a, sigma**2)

For N = 2 the five moments M_0..M_4 determine (rho_1, rho_2, v_1, v_2,
sigma) in closed form: sigma**2 = e + s0 where s0 is the unique negative
root of the cubic  2*s0**3 + (eta - 3 e**2)*s0 + q**2,  admissible on the
region

    Omega = { M_0 > 0, e > 0, eta > e**2 + q**2/e, and eta <= 3 e**2 if q = 0 }.

An optional limiter caps the abscissa separation du = |q|/(e - sigma**2) by
lowering sigma**2; the first four moments stay exact and the reconstructed
M_4 can only drop below the transported one.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, RealizabilityError
from .moments import (VACUUM_EPS, DiracQuadrature, _quadrature_from_recurrence,
                      _recurrence, adaptive_wheeler, central_invariants,
                      hankel_realizable)

# Relative thresholds for branch classification (dimensionless).
Q_ZERO_REL = 1e-12      # |q| below this times e**1.5 takes the q = 0 formulas
SINGLE_NODE_REL = 1e-7  # e - sigma**2 below this times the squared velocity
                        # scale collapses to one node; the margin covers the
                        # sqrt-amplified roundoff of 3e**2 - eta near the
                        # single-Gaussian boundary
ETA_CAP_REL = 1e-9      # eta above 3 e**2 by more than this is flagged


@dataclass(frozen=True)
class LimiterConfig:
    """Abscissa-separation limiter: start limiting at du_lim, saturate the
    separation below du_max via a tanh blend."""

    du_lim: float
    du_max: float
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and not (self.du_max > self.du_lim > 0.0):
            raise ValueError("need du_max > du_lim > 0")

    @classmethod
    def off(cls):
        return cls(du_lim=1.0, du_max=2.0, enabled=False)


@dataclass(frozen=True)
class GaussHermiteRule:
    """Nodes/weights for the weight exp(-s**2); weights normalized to sum 1."""

    abscissas: np.ndarray
    weights: np.ndarray

    @property
    def n(self):
        return len(self.weights)


@dataclass(frozen=True)
class Eqmom1DParams:
    """Gaussian-mixture reconstruction parameters.

    mode is one of 'two-node', 'single-node', 'multi-node', 'dirac'
    (sigma = 0 quadrature fallback) or 'vacuum'.  ``limited`` records an
    engaged separation limiter; ``fallback`` carries a short reason when the
    closed-form inversion could not be used.
    """

    rho: np.ndarray
    v: np.ndarray
    sigma: float
    mode: str = "two-node"
    limited: bool = False
    fallback: str | None = None

    @property
    def n_active(self):
        return int(np.count_nonzero(self.rho))


def gauss_hermite(n_nodes):
    """Gauss-Hermite rule for exp(-s**2), built from the Hermite three-term
    recurrence (b_k = k/2) and the Jacobi eigenproblem."""
    if n_nodes < 1:
        raise ValueError("need at least one node")
    if n_nodes == 1:
        return GaussHermiteRule(abscissas=np.zeros(1), weights=np.ones(1))
    diag = np.zeros(n_nodes)
    off = np.sqrt(np.arange(1, n_nodes) / 2.0)
    nodes, vecs = eigh_tridiagonal(diag, off)
    weights = vecs[0, :] ** 2
    weights = weights / weights.sum()
    return GaussHermiteRule(abscissas=nodes, weights=weights)


def _sigma2_cubic(e, q, k4):
    """Negative root of 2*s0**3 + k4*s0 + q**2 (k4 = eta - 3e**2), returned
    as sigma**2 = e + s0.  Assumes q != 0 and Omega membership."""
    c1 = k4 / (6.0 * e**2)
    c2 = q * q / (4.0 * e**3)
    disc = c1**3 + c2 * c2
    if disc >= 0.0:
        # One real root: the closed form of the real Cardano branch.
        c3 = (math.sqrt(disc) + c2) ** (1.0 / 3.0)
        if c3 < 1e-14:
            # q and k4 both numerically zero: single Gaussian.
            return e
        s2 = e * (1.0 - c3 + c1 / c3)
    else:
        # Three real roots (possible inside Omega for k4 < 0 with small q);
        # the admissible one is the most negative.
        p = k4 / 2.0
        qt = q * q / 2.0
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = (3.0 * qt) / (2.0 * p) * math.sqrt(-3.0 / p)
        phi = math.acos(min(1.0, max(-1.0, arg)))
        s0 = r * math.cos(phi / 3.0 - 4.0 * math.pi / 3.0)
        s2 = e + s0
    return min(max(s2, 0.0), e)


def sigma2_analytic(inv):
    """Shared spread sigma**2 of the two-node reconstruction.

    Parameters
    ----------
    inv : CentralInvariants
        Central moments of a vector inside Omega.

    Raises
    ------
    DomainError
        Outside Omega; the message names the violated inequality.
    """
    e, q = inv.e, inv.q
    if e <= 0.0:
        raise DomainError("outside Omega: need e > 0")
    k4 = inv.cumulant4
    if e * (k4 + 2.0 * e * e) - q * q <= 0.0:
        raise DomainError("outside Omega: need eta > e**2 + q**2/e")
    if abs(q) <= Q_ZERO_REL * e**1.5:
        if k4 > 3.0 * e**2 * ETA_CAP_REL:
            raise DomainError("outside Omega: need eta <= 3*e**2 when q = 0")
        return e - math.sqrt(max(-k4, 0.0) / 2.0)
    return _sigma2_cubic(e, q, k4)


def _limited_sigma2(e, q, s2, cfg):
    """Apply the tanh-blend limiter to an analytic sigma**2."""
    ebar = e - s2
    if abs(q) <= Q_ZERO_REL * e**1.5 or ebar <= 0.0:
        return s2, False
    du = abs(q) / ebar
    if du < cfg.du_lim:
        return s2, False
    width = cfg.du_max - cfg.du_lim
    blend = cfg.du_lim + width * math.tanh((du - cfg.du_lim) / width)
    return max(e - abs(q) / blend, 0.0), True


def sigma2_limited(inv, cfg):
    """sigma**2 with the separation limiter applied.

    Returns (sigma**2, limited_flag).  When the limiter engages, the new
    separation equals the blend value l < du_max; if even sigma = 0 cannot
    reach du_max (|q|/e > du_max) the result is clamped at sigma = 0.
    """
    s2 = sigma2_analytic(inv)
    if not cfg.enabled:
        return s2, False
    return _limited_sigma2(inv.e, inv.q, s2, cfg)


def _two_node_abscissas(ebar, q):
    """Centered abscissas/weights solving the first four moment equations
    for a given deconvolved variance ebar = e - sigma**2 > 0.

    The centered nodes are the roots of x**2 - (q/ebar) x - ebar; the
    near-zero root is recovered from the product to avoid cancellation.
    """
    b = q / ebar
    s = math.sqrt(b * b + 4.0 * ebar)
    if b >= 0.0:
        x2 = 0.5 * (b + s)
        x1 = -ebar / x2
    else:
        x1 = 0.5 * (b - s)
        x2 = -ebar / x1
    w1 = x2 / s
    w2 = -x1 / s
    return w1, w2, x1, x2


def _params_single(m0, mean, sigma2):
    return Eqmom1DParams(rho=np.array([m0, 0.0]), v=np.array([mean, 0.0]),
                         sigma=math.sqrt(max(sigma2, 0.0)), mode="single-node")


def _params_fallback(m, reason, cap=None):
    quad = adaptive_wheeler(m)
    if cap is not None and quad.n == 2 and \
            abs(float(np.sum(quad.abscissas)) - 2.0 * m[1] / m[0]) > cap:
        # Junk outside the realizable region can put a negligible weight at
        # an arbitrarily fast abscissa; project it out instead.
        mean = m[1] / m[0]
        e = max(m[2] / m[0] - mean * mean, 0.0)
        out = _params_single(m[0], mean, e)
        return Eqmom1DParams(rho=out.rho, v=out.v, sigma=out.sigma,
                             mode=out.mode, limited=True,
                             fallback="separation-capped")
    rho = np.zeros(2)
    v = np.zeros(2)
    rho[:quad.n] = quad.weights
    v[:quad.n] = quad.abscissas
    return Eqmom1DParams(rho=rho, v=v, sigma=0.0, mode="dirac", fallback=reason)


def invert_two_node(m, cfg=None, vacuum_eps=VACUUM_EPS, k4_floor=0.0):
    """Two-node Gaussian reconstruction of the moment vector M_0..M_4.

    Parameters
    ----------
    m : array_like
        At least five moments; entries beyond M_4 are ignored.
    cfg : LimiterConfig, optional
        Separation limiter; None disables limiting.
    vacuum_eps : float
        Number densities below this are treated as vacuum.
    k4_floor : float
        Noise level of the fourth cumulant of ``m`` as known to the caller
        (e.g. inherited cancellation error in conditional moment sets);
        negative fourth cumulants within the floor collapse cleanly to the
        single-Gaussian solution instead of sqrt-amplifying the noise.

    Returns
    -------
    Eqmom1DParams
        Inside Omega: all five moments are matched (or M_0..M_3 exactly and
        a reconstructed M_4 below the transported one when the limiter
        engages).  On the Omega boundary or outside it the result degrades
        to a sigma = 0 quadrature or a single node, with ``fallback`` set.
    """
    m = np.asarray(m, dtype=float)
    if len(m) < 5:
        raise ValueError("need at least moments M_0..M_4")
    if not np.all(np.isfinite(m[:5])):
        raise ValueError("moment vector contains non-finite entries")
    m0 = m[0]
    if m0 <= vacuum_eps:
        return Eqmom1DParams(rho=np.zeros(2), v=np.zeros(2), sigma=0.0,
                             mode="vacuum")
    inv = central_invariants(m)
    e, q, k4 = inv.e, inv.q, inv.cumulant4
    mean = m[1] / m0
    u2 = max(e, mean * mean)
    if e <= 1e-13 * u2 or u2 == 0.0:
        # Monokinetic cell: a single Dirac carries all the mass.
        return _params_single(m0, mean, 0.0)

    if e * (k4 + 2.0 * e * e) - q * q <= 0.0:
        # On or below the two-Dirac boundary of Omega.
        cap = cfg.du_max if cfg is not None and cfg.enabled else None
        return _params_fallback(m[:5], "outside-omega", cap)

    capped = None
    if abs(q) <= Q_ZERO_REL * e**1.5:
        neg = max(-k4, 0.0)
        if neg <= k4_floor:
            neg = 0.0
        s2 = e - math.sqrt(neg / 2.0)
        if k4 > 3.0 * e**2 * ETA_CAP_REL:
            # q = 0 with eta above the Gaussian value: no two-node Gaussian
            # matches M_4; keep the largest admissible spread.
            capped = "sigma-capped"
    else:
        s2 = _sigma2_cubic(e, q, k4)

    limited = False
    if cfg is not None and cfg.enabled:
        s2, limited = _limited_sigma2(e, q, s2, cfg)

    if e - s2 <= SINGLE_NODE_REL * u2:
        out = _params_single(m0, mean, e)
        return Eqmom1DParams(rho=out.rho, v=out.v, sigma=out.sigma,
                             mode=out.mode, fallback=capped)

    w1, w2, x1, x2 = _two_node_abscissas(e - s2, q)
    if cfg is not None and cfg.enabled and abs(x1 + x2) > cfg.du_max:
        # |q|/(e - sigma**2) exceeds du_max even at sigma = 0: no admissible
        # spread can cap the separation measure, so project to a single
        # Gaussian keeping mass, momentum and energy (bounded speeds).
        out = _params_single(m0, mean, e)
        return Eqmom1DParams(rho=out.rho, v=out.v, sigma=out.sigma,
                             mode=out.mode, limited=True,
                             fallback="separation-capped")
    return Eqmom1DParams(rho=np.array([m0 * w1, m0 * w2]),
                         v=np.array([mean + x1, mean + x2]),
                         sigma=math.sqrt(s2), mode="two-node",
                         limited=limited, fallback=capped)


def evaluate_moments(p, kmax):
    """Raw moments 0..kmax of a Gaussian-mixture reconstruction."""
    g = np.zeros((kmax + 1, len(p.rho)))
    g[0] = 1.0
    if kmax >= 1:
        g[1] = p.v
    s2 = p.sigma * p.sigma
    for k in range(2, kmax + 1):
        g[k] = p.v * g[k - 1] + (k - 1) * s2 * g[k - 2]
    return g @ p.rho


# Central moments of the standard normal: 0 for odd order, (k-1)!! for even.
_MU_STD = np.array([1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0, 0.0])


def _deconvolve(m, sigma, upto):
    """Moments of the Dirac skeleton: invert the lower-triangular relation
    M_k = sum_j C(k,j) sigma**(k-j) mu_{k-j} Mstar_j for k = 0..upto."""
    mstar = np.empty(upto + 1)
    for k in range(upto + 1):
        acc = m[k]
        for j in range(k):
            w = _MU_STD[k - j]
            if w != 0.0:
                acc -= math.comb(k, j) * sigma ** (k - j) * w * mstar[j]
        mstar[k] = acc
    return mstar


def _convolve_top(mstar, sigma, order):
    """Reconstructed moment of the given order from skeleton moments."""
    acc = 0.0
    for j in range(order + 1):
        w = _MU_STD[order - j]
        if w != 0.0:
            acc += math.comb(order, j) * sigma ** (order - j) * w * mstar[j]
    return acc


def invert_n_node(m, n_nodes, rtol=1e-12, max_iter=200, vacuum_eps=VACUUM_EPS):
    """N-node Gaussian reconstruction via a bracketed search on sigma.

    Scans sigma in [0, sqrt(e)] for the value whose reconstruction matches
    the top moment M_2N; the lower 2N moments are matched by construction.
    If the deconvolved skeleton moments lose realizability before the match,
    the largest realizable sigma is kept and the result is flagged
    'sigma-capped'.

    Raises
    ------
    RealizabilityError
        If the input vector itself is unrealizable.
    """
    m = np.asarray(m, dtype=float)
    if len(m) != 2 * n_nodes + 1:
        raise ValueError("moment vector length must be 2*n_nodes + 1")
    report = hankel_realizable(m)
    if not report:
        raise RealizabilityError(
            f"unrealizable moments: normalized Hankel determinant of order "
            f"{report.order} is {report.value:.3e}",
            order=report.order, value=report.value)
    if m[0] <= vacuum_eps:
        z = np.zeros(n_nodes)
        return Eqmom1DParams(rho=z, v=z.copy(), sigma=0.0, mode="vacuum")

    mean = m[1] / m[0]
    e = m[2] / m[0] - mean * mean
    if n_nodes == 1:
        return _params_single_n(m[0], mean, max(e, 0.0), 1)
    if e <= 0.0:
        return _params_single_n(m[0], mean, 0.0, n_nodes)

    top = 2 * n_nodes

    def attempt(sigma):
        """Full-N skeleton quadrature and top-moment defect at this sigma.

        Returns None when the deconvolved moments cannot support n_nodes
        nodes (skeleton on or outside the moment-space boundary); the
        search treats that exactly like an overshooting sigma.
        """
        mstar = _deconvolve(m, sigma, top - 1)
        if mstar[0] <= 0.0:
            return None
        a, b = _recurrence(mstar, n_nodes)
        if np.any(b[1:] <= 0.0):
            return None
        quad = _quadrature_from_recurrence(a, b)
        if np.any(quad.weights < 0.0):
            return None
        mstar_top = float(np.sum(quad.weights * quad.abscissas**top))
        full = np.append(mstar, mstar_top)
        g = _convolve_top(full, sigma, top) - m[top]
        return quad, g

    lo, hi = 0.0, math.sqrt(e)
    best = attempt(0.0)
    if best is None:
        return _params_fallback_n(m, n_nodes)
    scale = abs(m[top]) + m[0] * (abs(mean) + math.sqrt(e)) ** top
    if best[1] >= -1e-13 * scale:
        return _pack_n(best[0], 0.0, n_nodes, m[0], None)
    for _ in range(max_iter):
        if hi - lo <= rtol * math.sqrt(e):
            break
        mid = 0.5 * (lo + hi)
        res = attempt(mid)
        if res is None or res[1] >= 0.0:
            hi = mid
        else:
            lo = mid
            best = res
    matched = abs(best[1]) <= 1e-9 * scale
    return _pack_n(best[0], lo, n_nodes, m[0],
                   None if matched else "sigma-capped")


def _pack_n(quad, sigma, n_nodes, m0, fallback):
    """Arrange a skeleton quadrature into length-n parameter arrays,
    merging a numerically collapsed skeleton into a single wider Gaussian.

    The top-moment defect that drives the sigma search flattens cubically
    toward the single-Gaussian limit, so skeleton spreads below about
    eps**(1/3) of the velocity scale are search noise, not structure.
    """
    w, x = quad.weights, quad.abscissas
    if quad.n > 1:
        wsum = float(np.sum(w))
        mean = float(np.sum(w * x)) / wsum
        spread2 = float(np.sum(w * (x - mean) ** 2)) / wsum
        if spread2 <= 1e-4 * max(mean * mean, sigma * sigma, float(x @ x)):
            # Absorb the residual skeleton variance into the shared spread.
            w = np.array([m0])
            x = np.array([mean])
            sigma = math.sqrt(sigma * sigma + spread2)
    rho = np.zeros(n_nodes)
    v = np.zeros(n_nodes)
    rho[:len(w)] = w
    v[:len(x)] = x
    mode = "single-node" if len(w) == 1 else "multi-node"
    return Eqmom1DParams(rho=rho, v=v, sigma=sigma, mode=mode,
                         fallback=fallback)


def _params_single_n(m0, mean, e, n_nodes):
    rho = np.zeros(n_nodes)
    v = np.zeros(n_nodes)
    rho[0] = m0
    v[0] = mean
    return Eqmom1DParams(rho=rho, v=v, sigma=math.sqrt(max(e, 0.0)),
                         mode="single-node")


def _params_fallback_n(m, n_nodes):
    quad = adaptive_wheeler(m)
    rho = np.zeros(n_nodes)
    v = np.zeros(n_nodes)
    rho[:quad.n] = quad.weights[:n_nodes]
    v[:quad.n] = quad.abscissas[:n_nodes]
    return Eqmom1DParams(rho=rho, v=v, sigma=0.0, mode="dirac",
                         fallback="outside-omega")


def dual_quadrature_1d(p, rule):
    """Dirac representation with one node per (mixture node, Hermite node):
    weights rho_a * w_i at abscissas v_a + sqrt(2)*sigma*s_i."""
    shift = math.sqrt(2.0) * p.sigma * rule.abscissas
    x = (p.v[:, None] + shift[None, :]).ravel()
    w = (p.rho[:, None] * rule.weights[None, :]).ravel()
    order = np.argsort(x, kind="stable")
    return DiracQuadrature(weights=w[order], abscissas=x[order])


def kernel_integral_1d(p, kernel, rule):
    """Integral of kernel(v) against the reconstruction, by tensor
    Gauss-Hermite quadrature.  ``kernel`` must accept numpy arrays."""
    shift = math.sqrt(2.0) * p.sigma * rule.abscissas
    x = p.v[:, None] + shift[None, :]
    w = p.rho[:, None] * rule.weights[None, :]
    return float(np.sum(w * kernel(x)))


def kernel_integral_1d_pair(p, kernel, rule):
    """Double integral of kernel(v1, v2) against the reconstruction taken
    twice (collision-type term)."""
    dual = dual_quadrature_1d(p, rule)
    x = dual.abscissas
    w = dual.weights
    return float(np.sum(w[:, None] * w[None, :] * kernel(x[:, None], x[None, :])))
