"""Moment algebra for 1-D velocity distributions.

A moment vector is a plain 1-D numpy array ``m`` of odd length 2N+1 holding
the integer moments M_0 .. M_2N of a nonnegative measure on the real line
(number density times velocity**k).  Realizability is characterized by the
nonnegativity of the leading principal Hankel determinants

    H_0 = M_0,  H_2 = det [[M_0, M_1], [M_1, M_2]],  ...

All tolerances here are relative: moments are normalized by M_0 and by a
velocity scale derived from the vector itself before any comparison, so the
routines behave identically across unit systems.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import erfc, erfcx

from .errors import RealizabilityError, VacuumError

# Relative floor below which a number density is treated as vacuum.  The
# caller multiplies by its own reference density where one exists.
VACUUM_EPS = 1e-14

# Default relative tolerance for Hankel-determinant sign checks.
HANKEL_TOL = 1e-12


@dataclass(frozen=True)
class DiracQuadrature:
    """Weighted sum of Dirac nodes; abscissas ascending, weights >= 0."""

    weights: np.ndarray
    abscissas: np.ndarray

    @property
    def n(self):
        return len(self.weights)

    def moments(self, kmax):
        """Raw moments 0..kmax of the discrete measure."""
        if self.n == 0:
            return np.zeros(kmax + 1)
        pows = self.abscissas[None, :] ** np.arange(kmax + 1)[:, None]
        return pows @ self.weights


@dataclass(frozen=True)
class CentralInvariants:
    """Central moments e, q, eta (and s when M_5 is known) plus the
    dimensionless forms used by the five-moment closure.

    k4 = eta - 3*e**2 is the fourth cumulant, carried separately because the
    closure's cubic needs it far more accurately than the difference of the
    rounded eta and e allows.
    """

    e: float
    q: float
    eta: float
    k4: float | None = None
    s: float | None = None
    qstar: float | None = None
    etastar: float | None = None
    sstar: float | None = None

    @property
    def cumulant4(self):
        return self.k4 if self.k4 is not None else self.eta - 3.0 * self.e**2


@dataclass(frozen=True)
class HankelReport:
    """Outcome of a realizability check.

    ``order`` is the highest moment order entering the first failing
    determinant; ``value`` is that determinant after normalization.
    """

    ok: bool
    order: int | None = None
    value: float | None = None

    def __bool__(self):
        return self.ok


def velocity_scale(m):
    """Characteristic velocity of a moment vector (1.0 for degenerate data)."""
    m = np.asarray(m, dtype=float)
    if m[0] <= 0.0:
        return 1.0
    u2 = max(m[2] / m[0], (m[1] / m[0]) ** 2) if len(m) > 2 else (m[1] / m[0]) ** 2
    u = math.sqrt(max(u2, 0.0))
    return u if u > 0.0 else 1.0


def hankel_realizable(m, tol=HANKEL_TOL):
    """Check realizability through the even-order Hankel determinants.

    Parameters
    ----------
    m : array_like
        Moment vector of odd length >= 3.
    tol : float
        Relative tolerance; determinants of the normalized vector must be
        >= -tol.

    Returns
    -------
    HankelReport
        Truthy when every determinant passes.
    """
    m = np.asarray(m, dtype=float)
    if len(m) < 3 or len(m) % 2 == 0:
        raise ValueError("moment vector must have odd length >= 3")
    if not np.all(np.isfinite(m)):
        raise ValueError("moment vector contains non-finite entries")

    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return HankelReport(True)  # vacuum
    if m[0] <= 0.0:
        # No mass: realizable only if everything else vanishes too.
        if np.all(np.abs(m) <= tol * scale):
            return HankelReport(True)
        return HankelReport(False, order=0, value=m[0] / scale)

    u = velocity_scale(m)
    mh = m / (m[0] * u ** np.arange(len(m)))
    nmax = (len(m) - 1) // 2
    for k in range(nmax + 1):
        h = np.array([[mh[i + j] for j in range(k + 1)] for i in range(k + 1)])
        d = float(np.linalg.det(h))
        if d < -tol:
            return HankelReport(False, order=2 * k, value=d)
    return HankelReport(True)


def gaussian_moments(mean, sigma, kmax):
    """Raw moments 0..kmax of a unit-mass Gaussian N(mean, sigma**2).

    Uses the stable recursion G_k = mean*G_{k-1} + (k-1)*sigma**2*G_{k-2},
    equivalent to the binomial expansion with double-factorial central
    moments.
    """
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    g = np.empty(kmax + 1)
    g[0] = 1.0
    if kmax >= 1:
        g[1] = mean
    s2 = sigma * sigma
    for k in range(2, kmax + 1):
        g[k] = mean * g[k - 1] + (k - 1) * s2 * g[k - 2]
    return g


def central_invariants(m):
    """Central moments (e, q, eta[, s]) of a moment vector with M_0 > 0.

    e is the variance, q the third and eta the fourth central moment; s
    (fifth) is filled only when M_5 is supplied.  The starred forms are the
    corresponding dimensionless moments, defined whenever e > 0.
    """
    m = np.asarray(m, dtype=float)
    if len(m) < 5:
        raise ValueError("need at least moments M_0..M_4")
    m0, m1, m2, m3, m4 = m[:5]
    if m0 <= 0.0:
        raise VacuumError("central invariants undefined for M_0 <= 0")
    # Fused polynomial forms summed exactly: the closure is sensitive to
    # cancellation in q and especially in the fourth cumulant k4.
    e = math.fsum([m0 * m2, -m1 * m1]) / m0**2
    q = math.fsum([m3 * m0**2, -3.0 * m0 * m1 * m2, 2.0 * m1**3]) / m0**3
    eta = math.fsum([m4 * m0**3, -4.0 * m0**2 * m1 * m3,
                     6.0 * m0 * m1**2 * m2, -3.0 * m1**4]) / m0**4
    k4 = math.fsum([m4 * m0**3, -4.0 * m0**2 * m1 * m3, -3.0 * m0**2 * m2**2,
                    12.0 * m0 * m1**2 * m2, -6.0 * m1**4]) / m0**4
    s = None
    if len(m) >= 6:
        m5 = m[5]
        s = math.fsum([m5 * m0**4, -5.0 * m4 * m1 * m0**3,
                       10.0 * m3 * m1**2 * m0**2, -10.0 * m2 * m1**3 * m0,
                       4.0 * m1**5]) / m0**5
    qstar = etastar = sstar = None
    if e > 0.0:
        qstar = q * e**-1.5
        etastar = eta * e**-2.0
        if s is not None:
            sstar = s * e**-2.5
    return CentralInvariants(e=e, q=q, eta=eta, k4=k4, s=s,
                             qstar=qstar, etastar=etastar, sstar=sstar)


def _shifted_moments(nu, c):
    """Moments of the measure translated by -c (binomial transform)."""
    k = len(nu)
    mu = np.zeros(k)
    for l in range(k):
        acc = 0.0
        for i in range(l + 1):
            acc += math.comb(l, i) * (-c) ** (l - i) * nu[i]
        mu[l] = acc
    return mu


def _recurrence(nu, n):
    """Three-term recurrence coefficients (a, b) for n orthogonal
    polynomials of the measure with raw moments nu[0:2n].

    Centered at the mean before running the moment-based construction, which
    keeps the sigma quantities well scaled.  b[0] = nu[0]; b[k] <= 0 for some
    k >= 1 signals a vector on or outside the moment-space boundary.
    """
    nu = np.asarray(nu, dtype=float)
    if nu[0] <= 0.0:
        raise ValueError("zeroth moment must be positive")
    c = nu[1] / nu[0]
    mu = _shifted_moments(nu[: 2 * n], c)

    a = np.zeros(n)
    b = np.zeros(n)
    b[0] = mu[0]
    a[0] = mu[1] / mu[0]  # zero after centering, kept for generality
    if n == 1:
        a[0] += c
        return a, b
    sig_prev = np.zeros(2 * n)
    sig = mu.copy()
    for k in range(1, n):
        sig_new = np.zeros(2 * n)
        for l in range(k, 2 * n - k):
            sig_new[l] = sig[l + 1] - a[k - 1] * sig[l] - b[k - 1] * sig_prev[l]
        b[k] = sig_new[k] / sig[k - 1]
        if sig_new[k] <= 0.0:
            # Boundary or unrealizable data: b[k] <= 0 flags it, the
            # remaining coefficients are meaningless.
            b[k + 1:] = 0.0
            break
        a[k] = sig_new[k + 1] / sig_new[k] - sig[k] / sig[k - 1]
        sig_prev, sig = sig, sig_new
    a += c
    return a, b


def _quadrature_from_recurrence(a, b):
    """Gauss nodes/weights from recurrence coefficients via the Jacobi
    matrix eigenproblem.  Requires b[k] > 0 for k >= 1."""
    n = len(a)
    if n == 1:
        return DiracQuadrature(weights=np.array([b[0]]), abscissas=a.copy())
    nodes, vecs = eigh_tridiagonal(a, np.sqrt(b[1:]))
    weights = b[0] * vecs[0, :] ** 2
    return DiracQuadrature(weights=weights, abscissas=nodes)


def wheeler_quadrature(m, tol=HANKEL_TOL):
    """N-node Gauss quadrature matching the first 2N moments of ``m``.

    Parameters
    ----------
    m : array_like
        Moment vector of odd length 2N+1; must be realizable.

    Returns
    -------
    DiracQuadrature

    Raises
    ------
    RealizabilityError
        If the vector fails the Hankel test, or a recurrence coefficient
        b_k <= 0 prevents constructing N nodes (boundary data).
    """
    m = np.asarray(m, dtype=float)
    report = hankel_realizable(m, tol=tol)
    if not report:
        raise RealizabilityError(
            f"unrealizable moments: normalized Hankel determinant of order "
            f"{report.order} is {report.value:.3e}",
            order=report.order, value=report.value)
    n = (len(m) - 1) // 2
    a, b = _recurrence(m, n)
    for k in range(1, n):
        if b[k] <= 0.0:
            raise RealizabilityError(
                f"moment vector cannot support {n} nodes: b[{k}] = {b[k]:.3e}",
                order=2 * k, value=b[k])
    return _quadrature_from_recurrence(a, b)


def adaptive_wheeler(m, rmin=1e-10, vacuum_eps=VACUUM_EPS):
    """Gauss quadrature with automatic node-count reduction.

    Nodes are dropped when a recurrence coefficient, the smallest weight
    ratio, or the smallest abscissa separation falls below ``rmin`` (all
    measured relative to the vector's own scales).  Never raises: boundary
    input degrades to fewer nodes and vacuum input yields zero nodes.
    """
    m = np.asarray(m, dtype=float)
    if len(m) % 2 == 0:
        m = m[:-1]
    scale = float(np.max(np.abs(m))) if len(m) else 0.0
    if scale == 0.0 or m[0] <= vacuum_eps * max(scale, 1.0):
        return DiracQuadrature(weights=np.zeros(0), abscissas=np.zeros(0))
    u = velocity_scale(m)
    nmax = (len(m) - 1) // 2
    for n in range(nmax, 1, -1):
        a, b = _recurrence(m[: 2 * n + 1], n)
        if np.any(b[1:n] <= rmin * u * u):
            continue
        quad = _quadrature_from_recurrence(a, b)
        w = quad.weights
        if w.min() <= rmin * w.max():
            continue
        gaps = np.diff(quad.abscissas)
        if gaps.min() <= rmin * max(u, np.abs(quad.abscissas).max()):
            continue
        return quad
    return DiracQuadrature(weights=np.array([m[0]]),
                           abscissas=np.array([m[1] / m[0]]))


def truncated_gaussian_moments(lam, kmax):
    """Raw moments 0..kmax of the measure exp(-x**2) restricted to (lam, inf).

    Upward recursion m_k = (k-1)/2 m_{k-2} + lam**(k-1) exp(-lam**2)/2,
    seeded with erfc.  For lam > 0 the recursion runs on moments scaled by
    exp(lam**2) (seeded with erfcx) so nothing underflows; the scale is
    reapplied at the end and may flush to zero only for lam beyond ~27.
    """
    scaled = lam > 0.0
    if scaled:
        m = np.empty(kmax + 1)
        m[0] = 0.5 * math.sqrt(math.pi) * erfcx(lam)
        edge = 0.5
    else:
        m = np.empty(kmax + 1)
        m[0] = 0.5 * math.sqrt(math.pi) * erfc(lam)
        edge = 0.5 * math.exp(-lam * lam)
    if kmax >= 1:
        m[1] = edge
    for k in range(2, kmax + 1):
        m[k] = 0.5 * (k - 1) * m[k - 2] + edge * lam ** (k - 1)
    if scaled:
        m = m * math.exp(-lam * lam)
    return m


def truncated_gaussian_quadrature(lam):
    """Three-node Gauss quadrature of exp(-x**2) on (lam, inf).

    Reproduces the first six moments of the truncated measure.  As lam ->
    -inf the rule tends to the classical three-node Hermite rule with
    abscissas 0 and +-sqrt(3/2).
    """
    scaled = lam > 0.0
    if scaled:
        # Work with the exp(lam**2)-scaled moments; weights are rescaled
        # after the eigen solve so large lam cannot underflow mid-recurrence.
        m = np.empty(7)
        m[0] = 0.5 * math.sqrt(math.pi) * erfcx(lam)
        m[1] = 0.5
        for k in range(2, 7):
            m[k] = 0.5 * (k - 1) * m[k - 2] + 0.5 * lam ** (k - 1)
    else:
        m = truncated_gaussian_moments(lam, 6)
    a, b = _recurrence(m, 3)
    quad = _quadrature_from_recurrence(a, b)
    if scaled:
        quad = DiracQuadrature(weights=quad.weights * math.exp(-lam * lam),
                               abscissas=quad.abscissas)
    return quad
