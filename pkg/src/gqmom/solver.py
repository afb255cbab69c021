"""Explicit finite-volume integration of the moment systems.

First-order kinetic upwind transport: each cell is inverted, its split
fluxes evaluated analytically, and interfaces assembled as
F_{j+1/2} = F^+(cell j) + F^-(cell j+1).  Under the CFL bound
dt/dx * max(|v_a| + 1.8*sqrt(2)*sigma) <= 1 the 1-D update maps realizable
states to realizable states; a per-step Hankel assertion can be switched
on to monitor this.  The 2-D system is advanced by Lie-split directional
sweeps, sweep order alternating each step, followed by an exact drag
substep.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import gridops as go
from .ecqmom2d import PERM_2D, BivariateMoments, invert_2d
from .eqmom1d import invert_two_node
from .errors import DomainError, StepError
from .kinetic_flux import cfl_dt
from .moments import gaussian_moments


@dataclass
class DragConfig:
    """Stokes drag toward a prescribed carrier velocity field.

    ``velocity`` maps positions to carrier velocity components: in 1-D a
    callable x -> u_g, in 2-D (x, y) -> (u_g, v_g), vectorized over numpy
    arrays.  tau_p is the particle relaxation time.
    """

    tau_p: float
    velocity: object
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and not self.tau_p > 0.0:
            raise ValueError("tau_p must be positive")


@dataclass
class SolverState1D:
    """Structured 1-D grid of five-moment vectors."""

    x: np.ndarray
    dx: float
    moments: np.ndarray          # (n, 5)
    t: float = 0.0
    step_count: int = 0
    bc: str = "transmissive"
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_cells(self):
        return len(self.x)

    def copy(self):
        return SolverState1D(x=self.x.copy(), dx=self.dx,
                             moments=self.moments.copy(), t=self.t,
                             step_count=self.step_count, bc=self.bc,
                             diagnostics=dict(self.diagnostics))


@dataclass
class SolverState2D:
    """Structured periodic 2-D grid of 16-moment vectors."""

    x: np.ndarray
    y: np.ndarray
    dx: float
    dy: float
    moments: np.ndarray          # (nx, ny, 16)
    t: float = 0.0
    step_count: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.moments.shape[:2]

    def copy(self):
        return SolverState2D(x=self.x.copy(), y=self.y.copy(), dx=self.dx,
                             dy=self.dy, moments=self.moments.copy(),
                             t=self.t, step_count=self.step_count,
                             diagnostics=dict(self.diagnostics))


def _bump(diag, key, amount=1):
    if amount:
        diag[key] = diag.get(key, 0) + int(amount)


def _interface_fluxes(f_plus, f_minus, bc):
    """Face fluxes from per-cell split fluxes along axis 0.

    Returns an array with one more row than cells: face j sits between
    cells j-1 and j.
    """
    n = f_plus.shape[0]
    face = np.empty((n + 1,) + f_plus.shape[1:])
    face[1:] = f_plus
    face[:-1] += f_minus
    if bc == "periodic":
        face[0] = f_plus[-1] + f_minus[0]
        face[-1] = face[0]
    elif bc == "transmissive":
        face[0] = f_plus[0] + f_minus[0]
        face[-1] = f_plus[-1] + f_minus[-1]
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    return face


def _minmod(a, b):
    out = np.where((a > 0) & (b > 0), np.minimum(a, b), 0.0)
    return np.where((a < 0) & (b < 0), np.maximum(a, b), out)


def step_transport_1d(state, dt, du_lim=None, du_max=None,
                      check_realizable=False, high_order=False):
    """One first-order (optionally weight-reconstructed) transport step.

    Mutates and returns ``state``.  With ``check_realizable`` every updated
    cell must pass the Hankel test or a StepError naming the cell is
    raised.
    """
    m = state.moments
    g = go.invert_two_node_grid(m, du_lim, du_max)
    _bump(state.diagnostics, "limited_cells", np.sum(g.limited))
    _bump(state.diagnostics, "fallback_cells", np.sum(g.mode == go.MODE_DIRAC))

    if high_order:
        # Second-order minmod reconstruction of the weights only; the
        # abscissas and spread stay cell-centered, so realizability of the
        # half fluxes is preserved but the scheme-level guarantee is not.
        plus, minus = go.half_moments_grid(g.v, g.sigma[:, None], 5)
        rho = g.rho
        if state.bc == "periodic":
            rho_pad = np.concatenate([rho[-1:], rho, rho[:1]], axis=0)
        else:
            rho_pad = np.concatenate([rho[:1], rho, rho[-1:]], axis=0)
        slope = _minmod(rho_pad[1:-1] - rho_pad[:-2], rho_pad[2:] - rho_pad[1:-1])
        rho_right = np.maximum(rho + 0.5 * slope, 0.0)
        rho_left = np.maximum(rho - 0.5 * slope, 0.0)
        f_plus = np.einsum("na,nak->nk", rho_right, plus[..., 1:])
        f_minus = np.einsum("na,nak->nk", rho_left, minus[..., 1:])
    else:
        f_plus, f_minus = go.flux_1d_grid(g)

    face = _interface_fluxes(f_plus, f_minus, state.bc)
    state.moments = m - (dt / state.dx) * (face[1:] - face[:-1])
    state.t += dt
    state.step_count += 1
    if check_realizable:
        ok, worst = go.hankel_ok_grid(state.moments)
        if not ok.all():
            cell = int(np.nonzero(~ok)[0][0])
            raise StepError(
                f"realizability lost in cell {cell} at t={state.t:.6g} "
                f"(worst normalized determinant {worst:.3e})", cell=cell)
    return state


def cfl_dt_1d(state, cfl_number, du_lim=None, du_max=None, dt_max=np.inf):
    """Admissible step for the current 1-D state."""
    g = go.invert_two_node_grid(state.moments, du_lim, du_max)
    speed = float(np.max(go.speed_1d_grid(g)))
    return cfl_dt(speed, state.dx, cfl_number, dt_max)


def step_drag_1d(state, dt, drag):
    """Exact relaxation of all moments toward the local carrier velocity."""
    if not drag.enabled:
        return state
    decay = math.exp(-dt / drag.tau_p)
    u_g = np.asarray(drag.velocity(state.x), dtype=float)
    state.moments = go.drag_exact_1d(state.moments, u_g, decay)
    return state


def _sweep_2d_x(m, dx, dt, du_lim, du_max, du_lim_in, du_max_in, diag,
                high_order=False):
    """Conservative x-sweep of an (nx, ny, 16) canonical moment block.

    The sweep re-checks its own CFL number against the reconstruction it
    actually uses and sub-cycles when the state has stiffened since the
    step size was chosen (each substep re-inverts), keeping the update
    inside the stability bound without shrinking the global step.

    With ``high_order`` the outer weights are reconstructed to the faces
    with minmod slopes (abscissas and spreads stay cell-centered); this
    sharpens density structures but voids the realizability guarantee.
    """
    nx, ny, _ = m.shape
    remaining = dt
    s_seen = 0.0
    while remaining > 0.0:
        flat = m.reshape(nx * ny, 16)
        g = go.invert_2d_grid(flat, du_lim, du_max, du_lim_in, du_max_in)
        for key, val in g.counters.items():
            _bump(diag, key, val)
        sx, _ = go.speed_2d_grid(g)
        sx_max = float(np.max(sx))
        s_seen = max(s_seen, sx_max)
        dt_sub = remaining
        if sx_max * remaining / dx > 1.0:
            dt_sub = 0.9 * dx / sx_max
            _bump(diag, "subcycles")
        if high_order:
            rho = g.rho.reshape(nx, ny, 2)
            pad = np.concatenate([rho[-1:], rho, rho[:1]], axis=0)
            slope = _minmod(pad[1:-1] - pad[:-2], pad[2:] - pad[1:-1])
            rho_r = np.maximum(rho + 0.5 * slope, 0.0).reshape(nx * ny, 2)
            rho_l = np.maximum(rho - 0.5 * slope, 0.0).reshape(nx * ny, 2)
            f_plus, f_minus = go.flux_2d_x_weighted_grid(g, rho_r, rho_l)
        else:
            f_plus, f_minus = go.flux_2d_x_grid(g)
        face = _interface_fluxes(f_plus.reshape(nx, ny, 16),
                                 f_minus.reshape(nx, ny, 16), "periodic")
        m = m - (dt_sub / dx) * (face[1:] - face[:-1])
        remaining -= dt_sub
    return m, s_seen


def step_transport_2d(state, dt, du_lim=None, du_max=None, du_lim_in=None,
                      du_max_in=None, check_realizable=False,
                      high_order=False):
    """One Lie-split transport step (x then y on even steps, y then x on
    odd steps).  The y sweep runs the x machinery on the u<->v swapped,
    axis-transposed block.  Returns the (sx, sy) signal speeds actually
    encountered, for the caller's next step-size choice."""

    def sweep_x(m):
        return _sweep_2d_x(m, state.dx, dt, du_lim, du_max,
                           du_lim_in, du_max_in, state.diagnostics,
                           high_order)

    def sweep_y(m):
        swapped = np.transpose(m, (1, 0, 2))[:, :, PERM_2D]
        swapped, s_seen = _sweep_2d_x(swapped, state.dy, dt, du_lim, du_max,
                                      du_lim_in, du_max_in, state.diagnostics,
                                      high_order)
        back = np.ascontiguousarray(np.transpose(swapped, (1, 0, 2))[:, :, PERM_2D])
        return back, s_seen

    if state.step_count % 2 == 0:
        m, sx = sweep_x(state.moments)
        m, sy = sweep_y(m)
    else:
        m, sy = sweep_y(state.moments)
        m, sx = sweep_x(m)
    state.moments = m
    state.t += dt
    state.step_count += 1
    if check_realizable:
        flat = state.moments.reshape(-1, 16)
        bad = flat[:, 0] < 0.0
        if bad.any():
            cell = int(np.nonzero(bad)[0][0])
            raise StepError(f"negative density in cell {cell}", cell=cell)
    return sx, sy


def cfl_dt_2d(state, cfl_number, du_lim=None, du_max=None, dt_max=np.inf):
    """Admissible step for the current 2-D state.

    Both conditioning orientations are inverted: the y bound comes from the
    v-conditioned reconstruction's own outer abscissas rather than a
    support envelope, so the sweeps rarely need to sub-cycle.
    """
    flat = state.moments.reshape(-1, 16)
    g = go.invert_2d_grid(flat, du_lim, du_max)
    sx_max = float(np.max(go.speed_2d_grid(g)[0]))
    flat_sw = np.ascontiguousarray(flat[:, PERM_2D])
    g_sw = go.invert_2d_grid(flat_sw, du_lim, du_max)
    sy_max = float(np.max(go.speed_2d_grid(g_sw)[0]))
    dt = dt_max
    if sx_max > 0.0:
        dt = min(dt, cfl_number * state.dx / sx_max)
    if sy_max > 0.0:
        dt = min(dt, cfl_number * state.dy / sy_max)
    return dt


def step_drag_2d(state, dt, drag):
    """Exact relaxation of all 16 moments toward the local carrier flow.

    The carrier samples at cell centers are cached on the state (the drag
    field is evaluated at fixed positions every step).
    """
    if not drag.enabled:
        return state
    decay = math.exp(-dt / drag.tau_p)
    cache = state.diagnostics.get("_drag_cache")
    if cache is None or cache[0] is not drag:
        xx, yy = np.meshgrid(state.x, state.y, indexing="ij")
        u_g, v_g = drag.velocity(xx, yy)
        cache = (drag, np.ascontiguousarray(np.asarray(u_g, dtype=float).ravel()),
                 np.ascontiguousarray(np.asarray(v_g, dtype=float).ravel()))
        state.diagnostics["_drag_cache"] = cache
    flat = state.moments.reshape(-1, 16)
    out = go.drag_exact_2d(flat, cache[1], cache[2], decay)
    state.moments = out.reshape(state.moments.shape)
    return state


def run_1d(state, t_end, cfl_number=0.5, du_lim=None, du_max=None,
           drag=None, snapshot_times=(), on_snapshot=None,
           check_realizable=False, high_order=False, dt_max=np.inf,
           max_steps=10**7):
    """Drive the 1-D solver to t_end, invoking ``on_snapshot(state)`` at
    each requested time (and at t_end).  Returns the final state."""
    queue = sorted(set(float(s) for s in snapshot_times if state.t < s <= t_end))
    for _ in range(max_steps):
        if state.t >= t_end - 1e-14 * max(1.0, t_end):
            break
        dt = min(cfl_dt_1d(state, cfl_number, du_lim, du_max, dt_max),
                 t_end - state.t)
        hit = None
        if queue and state.t + dt >= queue[0] - 1e-14:
            dt = queue[0] - state.t
            hit = queue.pop(0)
        step_transport_1d(state, dt, du_lim, du_max, check_realizable,
                          high_order)
        if drag is not None and drag.enabled:
            step_drag_1d(state, dt, drag)
        if hit is not None and on_snapshot is not None:
            on_snapshot(state)
    return state


def run_2d(state, t_end, cfl_number=0.5, du_lim=None, du_max=None,
           du_lim_in=None, du_max_in=None, drag=None, snapshot_times=(),
           on_snapshot=None, check_realizable=False, high_order=False,
           dt_max=np.inf, max_steps=10**7):
    """Drive the 2-D solver to t_end with transport + drag Lie splitting.

    The step size is chosen from the signal speeds the previous step's
    sweeps actually encountered (the sweeps sub-cycle if the state
    stiffens mid-step), so each step costs exactly one inversion per
    sweep direction.
    """
    queue = sorted(set(float(s) for s in snapshot_times if state.t < s <= t_end))
    speeds = None
    for _ in range(max_steps):
        if state.t >= t_end - 1e-14 * max(1.0, t_end):
            break
        if speeds is None:
            dt = cfl_dt_2d(state, cfl_number, du_lim, du_max, dt_max)
        else:
            sx, sy = speeds
            dt = dt_max
            if sx > 0.0:
                dt = min(dt, cfl_number * state.dx / sx)
            if sy > 0.0:
                dt = min(dt, cfl_number * state.dy / sy)
        dt = min(dt, t_end - state.t)
        hit = None
        if queue and state.t + dt >= queue[0] - 1e-14:
            dt = queue[0] - state.t
            hit = queue.pop(0)
        speeds = step_transport_2d(state, dt, du_lim, du_max, du_lim_in,
                                   du_max_in, check_realizable, high_order)
        if drag is not None and drag.enabled:
            step_drag_2d(state, dt, drag)
        if hit is not None and on_snapshot is not None:
            on_snapshot(state)
    return state


# ---------------------------------------------------------------------------
# Hyperbolicity audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Audit1D:
    roots: np.ndarray
    coeffs: np.ndarray
    max_imag_rel: float
    min_gap_rel: float

    @property
    def hyperbolic(self):
        return self.max_imag_rel <= 1e-8 and self.min_gap_rel > 1e-8


@dataclass(frozen=True)
class Audit2D:
    audit_1d: Audit1D
    lam_plus: float
    lam_minus: float
    lam_numeric: np.ndarray
    formula_err: float
    min_sep_rel: float

    @property
    def hyperbolic(self):
        return (self.audit_1d.hyperbolic and self.formula_err <= 1e-10
                and self.min_sep_rel > 1e-10)


def characteristic_coefficients(rho1, rho2, v1, v2, sigma):
    """Coefficients (alpha..epsilon) of the five-moment closure Jacobian's
    characteristic polynomial P(X) = -X^5 + eps X^4 + delta X^3 + gamma X^2
    + beta X + alpha."""
    s0 = v1 * v2
    s1 = -(v1 + v2)
    rsum = rho1 + rho2
    vb = (rho1 * v1 + rho2 * v2) / rsum
    v2b = (rho1 * v1**2 + rho2 * v2**2) / rsum
    s2 = sigma * sigma
    c_eps = -2.0 * s1 + vb
    c_del = -s1**2 - 4.0 * s0 - 2.0 * v2b + 10.0 * s2
    c_gam = (-3.0 * s0 * s1 - s1 * v2b + 2.0 * s0 * vb
             + 6.0 * s2 * (2.0 * s1 - vb))
    c_bet = (-2.0 * s0 * v2b - 3.0 * s0**2
             + 3.0 * s2 * (s1**2 + 2.0 * v2b + 4.0 * s0) - 15.0 * s2**2)
    c_alp = (s0**2 * vb + s2 * (3.0 * s0 * s1 + s1 * v2b - 2.0 * s0 * vb)
             - 3.0 * s2**2 * (2.0 * s1 - vb))
    return np.array([c_alp, c_bet, c_gam, c_del, c_eps])


def _coeffs_from_params(p):
    if p.mode == "two-node":
        return characteristic_coefficients(p.rho[0], p.rho[1], p.v[0],
                                           p.v[1], p.sigma)
    if p.mode == "single-node":
        # Coincident-abscissa limit: split the mass evenly.
        return characteristic_coefficients(0.5 * p.rho[0], 0.5 * p.rho[0],
                                           p.v[0], p.v[0], p.sigma)
    raise DomainError(f"audit needs a Gaussian reconstruction, got {p.mode}")


def hyperbolicity_audit_1d(m):
    """Characteristic roots of the closure Jacobian at a moment vector.

    Raises DomainError outside the closed-form inversion region.  The
    report carries the largest imaginary part and the smallest pairwise
    root gap, both relative to the root magnitude scale.
    """
    p = invert_two_node(np.asarray(m, dtype=float))
    if p.fallback is not None:
        raise DomainError("audit needs moments inside the closure region")
    c = _coeffs_from_params(p)
    roots = np.roots(np.array([-1.0, c[4], c[3], c[2], c[1], c[0]]))
    scale = max(1e-300, float(np.max(np.abs(roots))))
    order = np.argsort(roots.real)
    roots = roots[order]
    gaps = np.diff(roots.real)
    return Audit1D(roots=roots, coeffs=c,
                   max_imag_rel=float(np.max(np.abs(roots.imag))) / scale,
                   min_gap_rel=float(np.min(gaps)) / scale)


def hyperbolicity_audit_2d(m):
    """Block eigenstructure audit of the x-direction 2-D system.

    Checks the closed-form pair lam_{+,-} = (u1+u2)/2 +-
    sqrt((u2-u1)**2/4 + sigma1**2) against the numerically diagonalized
    2x2 block, and their separation from the five 1-D roots.
    """
    if not isinstance(m, BivariateMoments):
        m = BivariateMoments(np.asarray(m, dtype=float))
    p = invert_2d(m)
    if p.mode != "nondegenerate":
        raise DomainError("2-D audit needs a nondegenerate reconstruction")
    base = hyperbolicity_audit_1d(m.m[np.array([0, 1, 3, 6, 10])])
    u1, u2 = p.u
    s1 = p.sigma1
    half = 0.5 * (u1 + u2)
    rad = math.sqrt(0.25 * (u2 - u1) ** 2 + s1 * s1)
    lam_p, lam_m = half + rad, half - rad
    a_block = np.array([[0.0, 1.0], [-u1 * u2 + s1 * s1, u1 + u2]])
    lam_num = np.sort(np.linalg.eigvals(a_block).real)
    scale = max(abs(lam_p), abs(lam_m), 1e-300)
    formula_err = max(abs(lam_num[0] - lam_m), abs(lam_num[1] - lam_p)) / scale
    sep = min(np.min(np.abs(base.roots.real - lam_p)),
              np.min(np.abs(base.roots.real - lam_m)))
    return Audit2D(audit_1d=base, lam_plus=lam_p, lam_minus=lam_m,
                   lam_numeric=lam_num, formula_err=formula_err,
                   min_sep_rel=sep / max(scale, float(np.max(np.abs(base.roots.real)))))


# ---------------------------------------------------------------------------
# Randomized realizability sweep of the first-order update (Prop-style)
# ---------------------------------------------------------------------------

def sample_omega_moments(rng, n, kmax=4):
    """Random moment vectors from forward-evaluated two-node parameters
    (always inside the closed-form region)."""
    rho = rng.uniform(0.1, 10.0, size=(n, 2))
    dv = rng.uniform(0.1, 10.0, size=n)
    vc = rng.uniform(-1.0, 1.0, size=n)
    sig = rng.uniform(0.01, 5.0, size=n)
    out = np.empty((n, kmax + 1))
    for i in range(n):
        v = (vc[i] - dv[i] / 2.0, vc[i] + dv[i] / 2.0)
        acc = np.zeros(kmax + 1)
        for r, vv in zip(rho[i], v):
            acc += r * gaussian_moments(vv, sig[i], kmax)
        out[i] = acc
    return out


def realizability_sweep(n_samples=10000, seed=0, cfl_number=1.0):
    """Update random realizable cell triples once at the CFL limit and
    Hankel-test the result.  Returns (n_violations, worst_determinant)."""
    rng = np.random.default_rng(seed)
    m = sample_omega_moments(rng, 3 * n_samples).reshape(n_samples, 3, 5)
    violations = 0
    worst = 0.0
    for i in range(n_samples):
        g = go.invert_two_node_grid(m[i])
        f_plus, f_minus = go.flux_1d_grid(g)
        speed = float(np.max(go.speed_1d_grid(g)))
        dt_dx = cfl_number / speed
        flux_r = f_plus[1] + f_minus[2]
        flux_l = f_plus[0] + f_minus[1]
        updated = m[i, 1] - dt_dx * (flux_r - flux_l)
        ok, det = go.hankel_ok_grid(updated[None, :])
        worst = min(worst, det)
        if not ok[0]:
            violations += 1
    return violations, worst
