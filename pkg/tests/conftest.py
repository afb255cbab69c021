"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the code paths they check: forward
moments come from direct summation of per-node Gaussian moments, bivariate
Gaussian moments from the Stein recursion, integrals from adaptive
quadrature, and the cubic root from bisection.
"""

import math

import numpy as np
import pytest

from gqmom.ecqmom2d import INDEX_2D, BivariateMoments, Ecqmom2DParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def forward_moments_1d(rho, v, sigma, kmax=4):
    """Direct-summation oracle for Gaussian-mixture raw moments."""
    out = np.zeros(kmax + 1)
    for r, vv in zip(rho, v):
        g = np.empty(kmax + 1)
        g[0] = 1.0
        if kmax >= 1:
            g[1] = vv
        for k in range(2, kmax + 1):
            g[k] = vv * g[k - 1] + (k - 1) * sigma * sigma * g[k - 2]
        out += r * g
    return out


def sample_two_node_params(rng, rho_range=(0.1, 10.0), dv_range=(0.1, 10.0),
                           vc_range=(-1.0, 1.0), sigma_range=(1e-6, 5.0)):
    """Random two-node parameters within the documented sampling ranges."""
    r1, r2 = rng.uniform(*rho_range, 2)
    dv = rng.uniform(*dv_range)
    vc = rng.uniform(*vc_range)
    s = rng.uniform(*sigma_range)
    return np.array([r1, r2]), np.array([vc - dv / 2.0, vc + dv / 2.0]), s


def sigma2_bisection_oracle(e, q, k4, tol=1e-15):
    """Bisection root of 2*s0**3 + k4*s0 + q**2 on (-e, 0)."""
    def poly(s0):
        return 2.0 * s0**3 + k4 * s0 + q * q

    lo, hi = -e, 0.0
    assert poly(lo) < 0.0 < poly(hi) or q == 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol * e:
            break
        if poly(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return e + 0.5 * (lo + hi)


def gauss2d_moments(mu_u, mu_v, su, sv, corr):
    """Bivariate-Gaussian moment oracle via the Stein recursion
    E[u^i v^j] = mu_u E[u^{i-1}v^j] + (i-1) su^2 E[u^{i-2}v^j]
                 + j cov E[u^{i-1}v^{j-1}]."""
    cov = corr * su * sv
    memo = {}

    def mom(i, j):
        if i < 0 or j < 0:
            return 0.0
        if (i, j) in memo:
            return memo[(i, j)]
        if i == 0 and j == 0:
            r = 1.0
        elif i > 0:
            r = (mu_u * mom(i - 1, j) + (i - 1) * su * su * mom(i - 2, j)
                 + j * cov * mom(i - 1, j - 1))
        else:
            r = (mu_v * mom(i, j - 1) + (j - 1) * sv * sv * mom(i, j - 2)
                 + i * cov * mom(i - 1, j - 1))
        memo[(i, j)] = r
        return r

    return BivariateMoments(np.array([mom(i, j) for (i, j) in INDEX_2D]))


def random_cond_params(rng, du_min=0.4):
    """Random nondegenerate conditional parameters with valid inner
    structure (inner weighted means vanish)."""
    rho = rng.uniform(0.2, 2.0, 2)
    u = np.sort(rng.uniform(-2.0, 2.0, 2))
    if u[1] - u[0] < du_min:
        u[1] = u[0] + du_min
    s1 = rng.uniform(0.1, 1.0)
    a0, a1 = rng.uniform(-1.0, 1.0, 2)
    rho_in = np.empty((2, 2))
    v_in = np.empty((2, 2))
    s2 = rng.uniform(0.1, 1.0, 2)
    for al in range(2):
        w = rng.uniform(0.2, 0.8)
        rho_in[al] = (w, 1.0 - w)
        dv = rng.uniform(0.4, 2.0)
        v_in[al] = (-(1.0 - w) * dv, w * dv)
    return Ecqmom2DParams(rho=rho, u=u, sigma1=s1, a0=a0, a1=a1,
                          rho_in=rho_in, v_in=v_in, sigma2=s2)


def param_errors_1d(p, rho, v, sigma, m0):
    """Scale-relative parameter recovery error (velocities measured against
    the velocity scale, weights against the total mass)."""
    uscale = max(np.max(np.abs(v)), sigma)
    return max(float(np.max(np.abs(p.rho - rho))) / m0,
               float(np.max(np.abs(p.v - v))) / uscale,
               abs(p.sigma - sigma) / uscale)
