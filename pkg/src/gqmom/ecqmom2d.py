"""Four-node conditional Gaussian reconstruction of bivariate moments.

The 16 transported moments are stored in a fixed canonical order (ascending
total order i+j, descending i within an order):

    M00, M10, M01, M20, M11, M02, M30, M21, M12, M03,
    M40, M31, M13, M04, M41, M14

The reconstruction conditions v on u:

    f(u, v) = sum_a rho_a N(u; u_a, sigma1**2)
              * sum_b rho_ab N(v - V(u); v_ab, sigma2_a**2)

with the linear conditional mean V(u) = a0 + a1*u fitted so that the first
two v-moments are matched.  Thirteen of the sixteen moments are reproduced
exactly; M21, M31 and M41 are closures of this orientation.  The degenerate
branch (single outer node) carries the whole u-marginal in one Gaussian and
is stored with rho = (M00, 0) so that evaluation code never branches.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .eqmom1d import invert_two_node
from .moments import VACUUM_EPS

INDEX_2D = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1),
            (1, 2), (0, 3), (4, 0), (3, 1), (1, 3), (0, 4), (4, 1), (1, 4)]
LOOKUP_2D = {ij: k for k, ij in enumerate(INDEX_2D)}
# Index permutation realizing the swap (i, j) -> (j, i).
PERM_2D = np.array([LOOKUP_2D[(j, i)] for (i, j) in INDEX_2D])
# Positions of the marginal moment sets M_{i,0} and M_{0,j}.
IDX_U = np.array([LOOKUP_2D[(i, 0)] for i in range(5)])
IDX_V = np.array([LOOKUP_2D[(0, j)] for j in range(5)])

# The three moments not reproduced by the linear-V reconstruction.
CLOSED_2D = [(2, 1), (3, 1), (4, 1)]
MATCHED_2D = [ij for ij in INDEX_2D if ij not in CLOSED_2D]


@dataclass(frozen=True)
class BivariateMoments:
    """The 16-moment set at one point, in canonical order."""

    m: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.m, dtype=float)
        if arr.shape != (16,):
            raise ValueError("expected 16 moments in canonical order")
        object.__setattr__(self, "m", arr)

    @classmethod
    def from_dict(cls, values):
        return cls(np.array([values[ij] for ij in INDEX_2D], dtype=float))

    def get(self, i, j):
        return float(self.m[LOOKUP_2D[(i, j)]])

    def swapped(self):
        """Moments of the same measure with u and v exchanged."""
        return BivariateMoments(self.m[PERM_2D])

    @property
    def m00(self):
        return float(self.m[0])

    @property
    def mean_u(self):
        return self.get(1, 0) / self.m00

    @property
    def mean_v(self):
        return self.get(0, 1) / self.m00

    @property
    def var_u(self):
        return self.get(2, 0) / self.m00 - self.mean_u**2

    @property
    def var_v(self):
        return self.get(0, 2) / self.m00 - self.mean_v**2

    @property
    def corr(self):
        cov = self.get(1, 1) / self.m00 - self.mean_u * self.mean_v
        denom = math.sqrt(self.var_u * self.var_v)
        return cov / denom if denom > 0.0 else 0.0


@dataclass(frozen=True)
class Ecqmom2DParams:
    """Conditional reconstruction parameters.

    Outer: weights rho (sum M00), abscissas u, shared spread sigma1.
    Conditional mean: V(u) = a0 + a1*u.
    Inner, per outer node a: unit weights rho_in[a], centered abscissas
    v_in[a] (their rho-weighted mean is zero) and spread sigma2[a].
    """

    rho: np.ndarray
    u: np.ndarray
    sigma1: float
    a0: float
    a1: float
    rho_in: np.ndarray
    v_in: np.ndarray
    sigma2: np.ndarray
    mode: str = "nondegenerate"
    flags: tuple = field(default_factory=tuple)

    @property
    def n_active(self):
        return int(np.count_nonzero(self.rho))


def _vacuum_params():
    return Ecqmom2DParams(rho=np.zeros(2), u=np.zeros(2), sigma1=0.0,
                          a0=0.0, a1=0.0, rho_in=np.zeros((2, 2)),
                          v_in=np.zeros((2, 2)), sigma2=np.zeros(2),
                          mode="vacuum")


def regress_V(m, tol=1e-12):
    """Coefficients of the conditional mean V(u) = a0 + a1*u.

    a1 is the regression slope of v on u; both defining moment identities
    (the reconstruction reproduces M01 and M11) follow.  Degenerate u
    variance falls back to the zero-slope fit a1 = 0, a0 = mean_v.

    Returns (a0, a1, degenerate_flag).
    """
    m00 = m.m00
    den = m00 * m.get(2, 0) - m.get(1, 0) ** 2
    scale = m00 * m.get(2, 0)
    if den <= tol * max(scale, m.get(1, 0) ** 2):
        return m.mean_v, 0.0, True
    a1 = (m00 * m.get(1, 1) - m.get(1, 0) * m.get(0, 1)) / den
    a0 = m.mean_v - m.mean_u * a1
    return a0, a1, False


def _gauss_powers(mean, sigma, kmax):
    """Raw Gaussian moments 0..kmax (vector form of gaussian_moments)."""
    g = np.empty(kmax + 1)
    g[0] = 1.0
    if kmax >= 1:
        g[1] = mean
    s2 = sigma * sigma
    for k in range(2, kmax + 1):
        g[k] = mean * g[k - 1] + (k - 1) * s2 * g[k - 2]
    return g


def uV_moments(u_a, sigma1, a0, a1, imax, jmax):
    """Table of <u**i V(u)**j> over the Gaussian N(u_a, sigma1**2).

    Expands V**j binomially, so entry (i, j) needs Gaussian moments up to
    order i + j.  Shape (imax+1, jmax+1).
    """
    g = _gauss_powers(u_a, sigma1, imax + jmax)
    a0p = a0 ** np.arange(jmax + 1)
    a1p = a1 ** np.arange(jmax + 1)
    out = np.empty((imax + 1, jmax + 1))
    for i in range(imax + 1):
        for j in range(jmax + 1):
            acc = 0.0
            for k in range(j + 1):
                acc += math.comb(j, k) * a0p[j - k] * a1p[k] * g[i + k]
            out[i, j] = acc
    return out


def _inner_invert(mu2, mu3, mu4, cfg):
    """Invert the conditional set {1, 0, mu2, mu3, mu4}; degrade to a single
    Dirac at the (zero) conditional mean when the set is not usable."""
    if not np.isfinite(mu2) or mu2 <= 0.0:
        return (np.array([1.0, 0.0]), np.zeros(2), 0.0,
                "inner-variance" if mu2 <= 0.0 else "inner-nan")
    p = invert_two_node(np.array([1.0, 0.0, mu2, mu3, mu4]), cfg)
    flag = p.fallback
    return p.rho.copy(), p.v.copy(), p.sigma, flag


def invert_2d(m, cfg=None, cfg_inner=None, vacuum_eps=VACUUM_EPS,
              pivot_tol=1e-12):
    """Conditional moment inversion (v conditioned on u).

    Parameters
    ----------
    m : BivariateMoments
    cfg, cfg_inner : LimiterConfig or None
        Limiters for the outer (u-marginal) and inner inversions.
    pivot_tol : float
        Relative floor on the 2x2 system pivot rho1*rho2*(u2-u1); below it
        the degenerate branch takes over.

    Returns
    -------
    Ecqmom2DParams
        Nondegenerate: reproduces the 13 matched moments exactly.
        Degenerate (Gaussian u-marginal): single outer node; for exactly
        Gaussian input the inner part collapses to one node with
        sigma2**2 = (1 - corr**2) * var_v.
    """
    if cfg_inner is None:
        cfg_inner = cfg
    m00 = m.m00
    if m00 <= vacuum_eps:
        return _vacuum_params()

    outer = invert_two_node(m.m[IDX_U], cfg)
    a0, a1, vflag = regress_V(m)
    flags = []
    if vflag:
        flags.append("flat-V")
    if outer.fallback:
        flags.append("outer-" + outer.fallback)

    uscale = math.sqrt(max(m.get(2, 0) / m00, m.mean_u**2, 1e-300))
    pivot = abs(outer.rho[0] * outer.rho[1] * (outer.v[1] - outer.v[0]))
    nondegenerate = (outer.n_active == 2 and
                     pivot > pivot_tol * (m00 / 2.0) ** 2 * uscale)

    if nondegenerate:
        rho, u, s1 = outer.rho, outer.v, outer.sigma
        uv = [uV_moments(u[al], s1, a0, a1, 1, 4) for al in range(2)]
        du = u[1] - u[0]

        def solve(r0, r1):
            mu1 = (u[1] * r0 - r1) / (rho[0] * du)
            mu2 = (r1 - u[0] * r0) / (rho[1] * du)
            return mu1, mu2

        mu2 = solve(m.get(0, 2) - sum(rho[al] * uv[al][0, 2] for al in range(2)),
                    m.get(1, 2) - sum(rho[al] * uv[al][1, 2] for al in range(2)))
        mu3 = solve(m.get(0, 3) - sum(rho[al] * (3.0 * uv[al][0, 1] * mu2[al]
                                                 + uv[al][0, 3]) for al in range(2)),
                    m.get(1, 3) - sum(rho[al] * (3.0 * uv[al][1, 1] * mu2[al]
                                                 + uv[al][1, 3]) for al in range(2)))
        mu4 = solve(m.get(0, 4) - sum(rho[al] * (4.0 * uv[al][0, 1] * mu3[al]
                                                 + 6.0 * uv[al][0, 2] * mu2[al]
                                                 + uv[al][0, 4]) for al in range(2)),
                    m.get(1, 4) - sum(rho[al] * (4.0 * uv[al][1, 1] * mu3[al]
                                                 + 6.0 * uv[al][1, 2] * mu2[al]
                                                 + uv[al][1, 4]) for al in range(2)))

        rho_in = np.empty((2, 2))
        v_in = np.empty((2, 2))
        sigma2 = np.empty(2)
        for al in range(2):
            r, v, s, flag = _inner_invert(mu2[al], mu3[al], mu4[al], cfg_inner)
            rho_in[al], v_in[al], sigma2[al] = r, v, s
            if flag:
                flags.append(f"inner{al}-{flag}")
        return Ecqmom2DParams(rho=rho.copy(), u=u.copy(), sigma1=s1,
                              a0=a0, a1=a1, rho_in=rho_in, v_in=v_in,
                              sigma2=sigma2, mode="nondegenerate",
                              flags=tuple(flags))

    # Degenerate branch: Gaussian (or collapsed) u-marginal.
    mean_u = m.mean_u
    sig_u = math.sqrt(max(m.var_u, 0.0))
    if outer.n_active == 1:
        mean_u, sig_u = outer.v[0], outer.sigma
    else:
        flags.append("pivot-degenerate")
    vj = uV_moments(mean_u, sig_u, a0, a1, 0, 4)[0]
    mu2 = m.get(0, 2) / m00 - vj[2]
    mu3 = m.get(0, 3) / m00 - vj[3] - 3.0 * vj[1] * mu2
    mu4 = m.get(0, 4) / m00 - vj[4] - 6.0 * vj[2] * mu2 - 4.0 * vj[1] * mu3
    r, v, s, flag = _inner_invert(mu2, mu3, mu4, cfg_inner)
    if flag:
        flags.append("inner-" + flag)
    return Ecqmom2DParams(rho=np.array([m00, 0.0]),
                          u=np.array([mean_u, mean_u]), sigma1=sig_u,
                          a0=a0, a1=a1,
                          rho_in=np.array([r, r]), v_in=np.array([v, v]),
                          sigma2=np.array([s, s]), mode="degenerate",
                          flags=tuple(flags))


def conditional_central_moments(p, jmax):
    """Inner central moments mu_a^j = sum_b rho_ab G_j(v_ab, sigma2_a),
    shape (2, jmax+1); mu^0 = 1 and mu^1 = 0 by construction."""
    out = np.empty((2, jmax + 1))
    for al in range(2):
        g = np.zeros((jmax + 1, 2))
        g[0] = 1.0
        if jmax >= 1:
            g[1] = p.v_in[al]
        s2 = p.sigma2[al] ** 2
        for k in range(2, jmax + 1):
            g[k] = p.v_in[al] * g[k - 1] + (k - 1) * s2 * g[k - 2]
        out[al] = g @ p.rho_in[al]
    return out


def evaluate_moments_2d(p, i, j):
    """Reconstructed moment M_ij of a conditional parameter set."""
    if p.mode == "vacuum":
        return 0.0
    mu = conditional_central_moments(p, j)
    acc = 0.0
    for al in range(2):
        if p.rho[al] == 0.0:
            continue
        uv = uV_moments(p.u[al], p.sigma1, p.a0, p.a1, i, j)
        inner = 0.0
        for j1 in range(j + 1):
            inner += math.comb(j, j1) * uv[i, j - j1] * mu[al, j1]
        acc += p.rho[al] * inner
    return acc


def evaluate_all_2d(p):
    """All 16 canonical moments of a reconstruction."""
    return np.array([evaluate_moments_2d(p, i, j) for (i, j) in INDEX_2D])


def dual_quadrature_2d(p, rule):
    """Dirac representation on the tensor Gauss-Hermite grid.

    Returns (weights, u_nodes, v_nodes) as flat arrays; the v nodes carry
    the conditional shift V(u_node).
    """
    ws, us, vs = [], [], []
    root2 = math.sqrt(2.0)
    for al in range(2):
        if p.rho[al] == 0.0:
            continue
        ui = p.u[al] + root2 * p.sigma1 * rule.abscissas
        for be in range(2):
            if p.rho_in[al, be] == 0.0:
                continue
            vj = p.v_in[al, be] + root2 * p.sigma2[al] * rule.abscissas
            w = (p.rho[al] * p.rho_in[al, be]
                 * rule.weights[:, None] * rule.weights[None, :])
            uu = np.broadcast_to(ui[:, None], w.shape)
            vv = p.a0 + p.a1 * uu + vj[None, :]
            ws.append(w.ravel())
            us.append(uu.ravel())
            vs.append(vv.ravel())
    if not ws:
        return np.zeros(0), np.zeros(0), np.zeros(0)
    return np.concatenate(ws), np.concatenate(us), np.concatenate(vs)


def kernel_integral_2d(p, kernel, rule):
    """Integral of kernel(u, v) against the reconstruction via tensor
    Gauss-Hermite quadrature; ``kernel`` must accept numpy arrays."""
    w, u, v = dual_quadrature_2d(p, rule)
    if len(w) == 0:
        return 0.0
    return float(np.sum(w * kernel(u, v)))


def kernel_integral_2d_avg(m, kernel, rule, cfg=None):
    """Average of the two conditioning orientations' estimates of the
    integral of kernel(u, v) against the measure with moments ``m``."""
    p12 = invert_2d(m, cfg)
    p21 = invert_2d(m.swapped(), cfg)
    est12 = kernel_integral_2d(p12, kernel, rule)
    est21 = kernel_integral_2d(p21, lambda a, b: kernel(b, a), rule)
    return 0.5 * (est12 + est21)
