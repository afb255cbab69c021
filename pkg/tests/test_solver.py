"""Finite-volume transport, drag splitting, and the hyperbolicity audits."""

import math

import numpy as np
import pytest

from gqmom import gridops as go
from gqmom.ecqmom2d import INDEX_2D, BivariateMoments, evaluate_all_2d
from gqmom.errors import DomainError, StepError
from gqmom.moments import gaussian_moments
from gqmom.solver import (Audit1D, DragConfig, SolverState1D, SolverState2D,
                          cfl_dt_1d, cfl_dt_2d, characteristic_coefficients,
                          hyperbolicity_audit_1d, hyperbolicity_audit_2d,
                          realizability_sweep, run_1d, run_2d,
                          sample_omega_moments, step_drag_1d, step_drag_2d,
                          step_transport_1d, step_transport_2d)

from conftest import forward_moments_1d, random_cond_params


def _uniform_state_1d(n=32, m=None):
    x = np.linspace(0.0, 1.0, n, endpoint=False) + 0.5 / n
    if m is None:
        m = gaussian_moments(0.4, 0.6, 4)
    return SolverState1D(x=x, dx=1.0 / n, moments=np.tile(m, (n, 1)),
                         bc="periodic")


class TestTransport1D:
    def test_uniform_state_invariant(self):
        st = _uniform_state_1d()
        before = st.moments.copy()
        for _ in range(10):
            step_transport_1d(st, 0.005)
        assert np.array_equal(st.moments, before)

    def test_dirac_beam_exact_translation(self):
        # A v = 1 Dirac beam with dt = dx translates exactly one cell.
        n = 32
        st = _uniform_state_1d(n, m=np.zeros(5))
        st.moments[5] = [1.0, 1.0, 1.0, 1.0, 1.0]
        before = st.moments.copy()
        step_transport_1d(st, st.dx)
        assert st.moments == pytest.approx(np.roll(before, 1, axis=0),
                                           abs=1e-14)

    def test_mass_conservation_periodic(self, rng):
        st = _uniform_state_1d(64)
        st.moments[:, 0] *= 1.0 + 0.3 * np.sin(2 * np.pi * st.x)
        st.moments[:, 1:] *= st.moments[:, :1]
        total = st.moments[:, 0].sum()
        run_1d(st, 0.3, cfl_number=0.5)
        assert st.moments[:, 0].sum() == pytest.approx(total, rel=1e-12)

    def test_realizability_assertion_raises_on_bad_state(self):
        st = _uniform_state_1d()
        st.moments[3, 4] = -5.0
        with pytest.raises(StepError):
            step_transport_1d(st, 1e-4, check_realizable=True)

    def test_transmissive_boundary_keeps_uniform(self):
        st = _uniform_state_1d()
        st.bc = "transmissive"
        before = st.moments.copy()
        step_transport_1d(st, 0.005)
        assert np.array_equal(st.moments, before)

    def test_high_order_flag_conserves_mass(self):
        st = _uniform_state_1d(64)
        st.moments[:, 0] *= 1.0 + 0.3 * np.sin(2 * np.pi * st.x)
        st.moments[:, 1:] *= st.moments[:, :1]
        total = st.moments[:, 0].sum()
        run_1d(st, 0.2, cfl_number=0.4, high_order=True)
        assert st.moments[:, 0].sum() == pytest.approx(total, rel=1e-12)

    def test_single_step_stencil_locality(self):
        # One update touches only nearest neighbors: information moves at
        # most one cell per step.
        n = 64
        st = _uniform_state_1d(n, m=np.zeros(5))
        st.moments[20] = gaussian_moments(1.0, 0.5, 4)
        step_transport_1d(st, 1e-3)
        touched = np.nonzero(st.moments[:, 0] > 0.0)[0]
        assert set(touched) <= {19, 20, 21}

    def test_compact_support_cone_with_decay(self):
        # Mass beyond the integrated CFL cone decays exponentially: a few
        # cells past the cone only round-off-level mass remains.
        n = 200
        st = SolverState1D(x=np.linspace(-1, 1, n, endpoint=False) + 1.0 / n,
                           dx=2.0 / n, moments=np.zeros((n, 5)),
                           bc="transmissive")
        center = np.abs(st.x) < 0.1
        st.moments[center] = gaussian_moments(1.0, 0.5, 4)
        total = st.moments[:, 0].sum()
        reach = 0.1
        cfg = (2.0, 3.0)
        while st.t < 0.2:
            g = go.invert_two_node_grid(st.moments, *cfg)
            speed = float(np.max(go.speed_1d_grid(g)))
            dt = 0.5 * st.dx / speed
            step_transport_1d(st, dt, *cfg)
            reach += dt * speed
        outside = np.abs(st.x) > reach + 8 * st.dx
        assert st.moments[outside, 0].sum() <= 1e-8 * total


class TestDrag:
    def test_identity_when_disabled(self):
        st = _uniform_state_1d()
        before = st.moments.copy()
        step_drag_1d(st, 0.1, DragConfig(tau_p=1.0, velocity=lambda x: 0 * x,
                                         enabled=False))
        assert np.array_equal(st.moments, before)

    def test_full_relaxation(self):
        st = _uniform_state_1d()
        drag = DragConfig(tau_p=1e-9, velocity=lambda x: np.full_like(x, 0.7))
        step_drag_1d(st, 1.0, drag)
        m = st.moments
        assert m[:, 1] / m[:, 0] == pytest.approx(0.7, rel=1e-9)
        e = m[:, 2] / m[:, 0] - (m[:, 1] / m[:, 0]) ** 2
        assert np.max(np.abs(e)) < 1e-9

    def test_2d_mass_invariant(self, rng):
        m = evaluate_all_2d(random_cond_params(rng))
        st = SolverState2D(x=np.array([0.5]), y=np.array([0.5]), dx=1.0,
                           dy=1.0, moments=m.reshape(1, 1, 16))
        drag = DragConfig(tau_p=0.5,
                          velocity=lambda x, y: (0 * x + 0.3, 0 * y - 0.2))
        before = m[0]
        step_drag_2d(st, 0.2, drag)
        assert st.moments[0, 0, 0] == pytest.approx(before, rel=1e-15)


class TestTransport2D:
    def _state(self, m16, n=8):
        c = np.linspace(0.0, 1.0, n, endpoint=False) + 0.5 / n
        return SolverState2D(x=c, y=c.copy(), dx=1.0 / n, dy=1.0 / n,
                             moments=np.tile(m16, (n, n, 1)))

    def test_uniform_state_invariant(self, rng):
        m16 = evaluate_all_2d(random_cond_params(rng))
        st = self._state(m16)
        before = st.moments.copy()
        step_transport_2d(st, 1e-3)
        assert np.max(np.abs(st.moments - before)) < 1e-13 * np.max(np.abs(m16))

    def test_pure_x_beam_keeps_v_moments(self):
        # Monokinetic beam along +x: no v-moment structure may appear.
        vals = {(i, j): 1.0 * (1.0 ** i) * (0.0 ** j) for (i, j) in INDEX_2D}
        m16 = np.array([vals[ij] for ij in INDEX_2D])
        st = self._state(m16, n=8)
        st.moments[3:5, :, :] *= 2.0  # density stripe
        run_2d(st, 0.2, cfl_number=0.5)
        flat = st.moments.reshape(-1, 16)
        from gqmom.ecqmom2d import LOOKUP_2D
        for (i, j) in INDEX_2D:
            if j > 0:
                assert np.max(np.abs(flat[:, LOOKUP_2D[(i, j)]])) < 1e-13

    def test_mass_conservation_2d(self, rng):
        m16 = evaluate_all_2d(random_cond_params(rng))
        st = self._state(m16, n=12)
        stripe = 1.0 + 0.4 * np.sin(2 * np.pi * st.x)
        st.moments *= stripe[:, None, None]
        total = st.moments[:, :, 0].sum()
        run_2d(st, 0.15, cfl_number=0.5, du_lim=3.0, du_max=5.0)
        assert st.moments[:, :, 0].sum() == pytest.approx(total, rel=1e-12)
        run_2d(st, 0.3, cfl_number=0.5, du_lim=3.0, du_max=5.0,
               high_order=True)
        assert st.moments[:, :, 0].sum() == pytest.approx(total, rel=1e-12)

    def test_rigid_rotation_conserves_and_returns(self):
        # Solid-body-like carrier via drag; mass stays exactly conserved.
        n = 16
        c = np.linspace(0.0, 1.0, n, endpoint=False) + 0.5 / n
        xx, yy = np.meshgrid(c, c, indexing="ij")
        u = -(yy - 0.5)
        v = (xx - 0.5)
        m = np.zeros((n, n, 16))
        for k, (i, j) in enumerate(INDEX_2D):
            m[:, :, k] = u**i * v**j
        st = SolverState2D(x=c, y=c.copy(), dx=1.0 / n, dy=1.0 / n, moments=m)
        total = st.moments[:, :, 0].sum()
        run_2d(st, 0.2, cfl_number=0.5, du_lim=2.0, du_max=3.0)
        assert st.moments[:, :, 0].sum() == pytest.approx(total, rel=1e-12)
        assert st.moments[:, :, 0].min() > -1e-12


class TestCFL:
    def test_cfl_dt_1d(self):
        st = _uniform_state_1d()
        dt = cfl_dt_1d(st, 0.5)
        g = go.invert_two_node_grid(st.moments)
        speed = float(np.max(go.speed_1d_grid(g)))
        assert dt == pytest.approx(0.5 * st.dx / speed)

    def test_vacuum_grid_dt_max(self):
        st = _uniform_state_1d(m=np.zeros(5))
        assert cfl_dt_1d(st, 0.5, dt_max=3.0) == 3.0

    def test_cfl_dt_2d_covers_both_directions(self, rng):
        m16 = evaluate_all_2d(random_cond_params(rng))
        c = np.array([0.5])
        st = SolverState2D(x=c, y=c.copy(), dx=1.0, dy=1.0,
                           moments=m16.reshape(1, 1, 16))
        dt = cfl_dt_2d(st, 1.0)
        assert dt <= 1.0 / max(1e-12, go.speed_2d_grid(
            go.invert_2d_grid(m16[None, :]))[0][0])


class TestHyperbolicityAudit:
    def test_degenerate_closed_form_roots(self):
        vb, sg = 0.5, 0.8
        rep = hyperbolicity_audit_1d(gaussian_moments(vb, sg, 4))
        expect = np.sort([vb,
                          vb + sg * math.sqrt(5 + math.sqrt(10)),
                          vb - sg * math.sqrt(5 + math.sqrt(10)),
                          vb + sg * math.sqrt(5 - math.sqrt(10)),
                          vb - sg * math.sqrt(5 - math.sqrt(10))])
        assert np.sort(rep.roots.real) == pytest.approx(expect, abs=1e-12)
        assert rep.hyperbolic

    def test_coefficient_polynomial_consistency(self, rng):
        # P(root) = 0 for every numerical root of the assembled polynomial.
        m = forward_moments_1d([0.3, 0.7], [-2.0, 1.0], 0.5)
        rep = hyperbolicity_audit_1d(m)
        c = rep.coeffs
        for lam in rep.roots:
            val = (-lam**5 + c[4] * lam**4 + c[3] * lam**3 + c[2] * lam**2
                   + c[1] * lam + c[0])
            assert abs(val) < 1e-8 * max(1.0, abs(lam) ** 5)

    def test_omega_sample_sweep(self, rng):
        samples = sample_omega_moments(rng, 300)
        for row in samples:
            rep = hyperbolicity_audit_1d(row)
            assert rep.hyperbolic

    def test_outside_omega_raises(self):
        with pytest.raises(DomainError):
            hyperbolicity_audit_1d(forward_moments_1d([0.4, 0.6],
                                                      [-1.0, 1.5], 0.0))

    def test_2d_block_eigenvalues(self, rng):
        for _ in range(50):
            p = random_cond_params(rng)
            m = BivariateMoments(evaluate_all_2d(p))
            rep = hyperbolicity_audit_2d(m)
            assert rep.formula_err < 1e-12
            u1, u2 = rep.audit_1d, None
            lam_ref = 0.5 * (p.u[0] + p.u[1]) + math.sqrt(
                0.25 * (p.u[1] - p.u[0]) ** 2 + p.sigma1**2)
            assert rep.lam_plus == pytest.approx(lam_ref, rel=1e-7)
            assert rep.hyperbolic


class TestRealizabilitySweep:
    def test_no_violations_at_cfl_limit(self):
        viol, worst = realizability_sweep(500, seed=3, cfl_number=1.0)
        assert viol == 0


class TestRiemannSymmetry:
    def test_mirror_symmetry_exact(self):
        from gqmom.cases import riemann_setup
        st = riemann_setup(ncells=102)
        run_1d(st, 0.2, cfl_number=0.5, du_lim=8.0, du_max=10.0)
        m0 = st.moments[:, 0]
        m1 = st.moments[:, 1]
        assert np.max(np.abs(m0 - m0[::-1])) < 1e-10
        assert np.max(np.abs(m1 + m1[::-1])) < 1e-10
