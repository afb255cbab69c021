"""Riemann problem: opposed Maxwellian streams meeting at x = 0.

Initial state: unit density everywhere, mean velocity +1 for x < 0 and -1
for x >= 0, equilibrium spread sigma**2 = 1/3.  The crossing streams drive
the velocity distribution far from equilibrium in the center while the
far field stays near its initial state.
"""

import math

import numpy as np

from .. import gridops as go
from ..moments import gaussian_moments
from ..solver import SolverState1D

E0_DEFAULT = 1.0 / 3.0


def riemann_setup(ncells=402, domain=(-2.0, 2.0), sigma2=E0_DEFAULT,
                  mean_left=1.0, mean_right=-1.0, density=1.0):
    """Initial solver state for the two-stream Riemann problem."""
    x0, x1 = domain
    dx = (x1 - x0) / ncells
    x = x0 + dx * (np.arange(ncells) + 0.5)
    sig = math.sqrt(sigma2)
    left = density * gaussian_moments(mean_left, sig, 4)
    right = density * gaussian_moments(mean_right, sig, 4)
    m = np.where((x < 0.0)[:, None], left[None, :], right[None, :])
    return SolverState1D(x=x, dx=dx, moments=np.ascontiguousarray(m),
                         bc="transmissive")


def riemann_diagnostics(state, du_lim=None, du_max=None, e0=E0_DEFAULT):
    """Per-cell profiles of the transported and reconstructed quantities.

    Returns a dict of equal-length arrays: x, M0..M4, the reconstructed
    M5bar, the node parameters, sigma2, sigma2/e and the normalized central
    moments e* = e/e0, q*, eta*.  Vacuum cells carry NaN in the derived
    columns.
    """
    m = state.moments
    g = go.invert_two_node_grid(m, du_lim, du_max)
    e, q, k4, mean = go.central_arrays(m)
    vac = g.mode == go.MODE_VACUUM
    live = ~vac

    s2 = g.sigma**2
    v = g.v
    rho = g.rho
    # Reconstructed fifth moment of the Gaussian mixture.
    m5bar = np.sum(rho * (v**5 + 10.0 * v**3 * s2[:, None]
                          + 15.0 * v * s2[:, None] ** 2), axis=1)

    def masked(arr):
        out = np.asarray(arr, dtype=float).copy()
        out[vac] = np.nan
        return out

    e_safe = np.where(live & (e > 0.0), e, np.nan)
    eta = k4 + 3.0 * e * e
    out = {
        "x": state.x.copy(),
        "t": np.full(state.n_cells, state.t),
        "M0": m[:, 0].copy(), "M1": m[:, 1].copy(), "M2": m[:, 2].copy(),
        "M3": m[:, 3].copy(), "M4": m[:, 4].copy(),
        "M5bar": masked(m5bar),
        "rho1": masked(rho[:, 0]), "rho2": masked(rho[:, 1]),
        "v1": masked(v[:, 0]), "v2": masked(v[:, 1]),
        "sigma2": masked(s2),
        "sig2_over_e": masked(s2 / e_safe),
        "estar": masked(e / e0),
        "qstar": masked(q / e_safe**1.5),
        "etastar": masked(eta / e_safe**2),
        "limited": g.limited.astype(float),
    }
    return out
