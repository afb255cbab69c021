"""Batched kernels against the scalar reference implementations."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from gqmom import gridops as go
from gqmom.ecqmom2d import (INDEX_2D, LOOKUP_2D, BivariateMoments,
                            evaluate_all_2d, invert_2d)
from gqmom.eqmom1d import LimiterConfig, invert_two_node
from gqmom.kinetic_flux import flux_1d, flux_2d_x, max_speed_1d, max_speed_2d
from gqmom.moments import gaussian_moments, hankel_realizable

from conftest import (forward_moments_1d, gauss2d_moments, random_cond_params,
                      sample_two_node_params)


def _batch_1d(rng, n=300):
    rows = []
    for _ in range(n):
        rho, v, s = sample_two_node_params(rng, sigma_range=(0.02, 4.0))
        rows.append(forward_moments_1d(rho, v, s))
    rows.append(np.zeros(5))                                 # vacuum
    rows.append(np.array([2.0, 2.0, 2.0, 2.0, 2.0]))         # monokinetic
    rows.append(gaussian_moments(1.0, 1.0 / math.sqrt(3.0), 4))
    rows.append(forward_moments_1d([0.4, 0.6], [-1.0, 1.5], 0.0))  # boundary
    return np.array(rows)


@pytest.mark.parametrize("limiter", [None, (0.8, 1.5)])
def test_two_node_grid_matches_scalar(rng, limiter):
    m = _batch_1d(rng)
    cfg = LimiterConfig(*limiter) if limiter else None
    g = go.invert_two_node_grid(m, *(limiter or (None, None)))
    for i in range(m.shape[0]):
        p = invert_two_node(m[i], cfg)
        uscale = max(np.max(np.abs(p.v)), p.sigma, 1e-12)
        assert np.max(np.abs(g.rho[i] - p.rho)) <= 1e-6 * max(m[i, 0], 1e-12)
        assert np.max(np.abs(g.v[i] - p.v)) <= 1e-6 * uscale
        assert abs(g.sigma[i] - p.sigma) <= 1e-6 * uscale
        assert bool(g.limited[i]) == p.limited


def test_grid_mode_codes(rng):
    m = _batch_1d(rng)
    g = go.invert_two_node_grid(m)
    n = m.shape[0]
    assert g.mode[n - 4] == go.MODE_VACUUM
    assert g.mode[n - 3] == go.MODE_SINGLE
    assert g.mode[n - 2] == go.MODE_SINGLE
    assert g.mode[n - 1] == go.MODE_DIRAC


def test_flux_1d_grid_matches_scalar(rng):
    m = _batch_1d(rng)
    g = go.invert_two_node_grid(m)
    fp, fm = go.flux_1d_grid(g)
    for i in range(m.shape[0]):
        sp, sm = flux_1d(invert_two_node(m[i]))
        scale = max(np.max(np.abs(sp)), np.max(np.abs(sm)), 1e-12)
        assert np.max(np.abs(fp[i] - sp)) <= 1e-6 * scale
        assert np.max(np.abs(fm[i] - sm)) <= 1e-6 * scale


def test_speed_1d_grid_matches_scalar(rng):
    m = _batch_1d(rng)
    g = go.invert_two_node_grid(m)
    speeds = go.speed_1d_grid(g)
    for i in range(m.shape[0]):
        assert speeds[i] == pytest.approx(
            max_speed_1d(invert_two_node(m[i])), rel=1e-6, abs=1e-12)


def test_half_moments_grid_partition(rng):
    v = rng.uniform(-5, 5, (40, 2))
    s = rng.uniform(0.0, 3.0, 40)
    s[:5] = 0.0
    plus, minus = go.half_moments_grid(v, s[:, None], 6)
    for i in range(40):
        for a in range(2):
            full = gaussian_moments(v[i, a], s[i], 6)
            scale = np.maximum(np.abs(full), 1.0)
            assert np.max(np.abs(plus[i, a] + minus[i, a] - full) / scale) < 1e-13


def test_hankel_grid(rng):
    m = _batch_1d(rng)
    ok, worst = go.hankel_ok_grid(m)
    assert ok.all()
    bad = m.copy()
    bad[0, 4] = 0.0
    ok2, worst2 = go.hankel_ok_grid(bad)
    assert not ok2[0]
    assert ok2[1:].all()
    assert worst2 < 0.0
    for i in range(m.shape[0]):
        assert bool(ok[i]) == bool(hankel_realizable(m[i], tol=1e-10))


def _batch_2d(rng, n=150):
    rows = [evaluate_all_2d(random_cond_params(rng)) for _ in range(n)]
    rows.append(gauss2d_moments(0.3, -0.2, 1.1, 0.8, 0.6).m)   # degenerate
    rows.append(np.array([2.0 * 0.7**i * (-0.4) ** j for (i, j) in INDEX_2D]))
    rows.append(np.zeros(16))                                  # vacuum
    return np.array(rows)


def test_invert_2d_grid_matches_scalar(rng):
    m2 = _batch_2d(rng)
    g = go.invert_2d_grid(m2)
    for i in range(m2.shape[0]):
        p = invert_2d(BivariateMoments(m2[i]))
        uscale = max(np.max(np.abs(p.u)), p.sigma1, 1e-12)
        assert np.max(np.abs(g.rho[i] - p.rho)) <= 1e-6 * max(m2[i, 0], 1e-9)
        assert np.max(np.abs(g.u[i] - p.u)) <= 1e-6 * uscale
        assert abs(g.sigma1[i] - p.sigma1) <= 1e-6 * uscale
        assert abs(g.a0[i] - p.a0) <= 1e-8 * max(1.0, abs(p.a0))
        assert abs(g.a1[i] - p.a1) <= 1e-8 * max(1.0, abs(p.a1))
        assert np.max(np.abs(g.rho_in[i] - p.rho_in)) <= 1e-6
        assert np.max(np.abs(g.v_in[i] - p.v_in)) <= 1e-6 * max(uscale, 1.0)
        assert np.max(np.abs(g.sigma2[i] - p.sigma2)) <= 1e-6 * max(uscale, 1.0)


def test_flux_2d_grid_matches_scalar(rng):
    m2 = _batch_2d(rng, n=60)
    g = go.invert_2d_grid(m2)
    fp, fm = go.flux_2d_x_grid(g)
    for i in range(m2.shape[0]):
        sp, sm = flux_2d_x(invert_2d(BivariateMoments(m2[i])))
        scale = max(np.max(np.abs(sp)), np.max(np.abs(sm)), 1e-12)
        assert np.max(np.abs(fp[i] - sp)) <= 1e-6 * scale
        assert np.max(np.abs(fm[i] - sm)) <= 1e-6 * scale


def test_weighted_flux_reduces_to_plain(rng):
    m2 = _batch_2d(rng, n=40)
    g = go.invert_2d_grid(m2)
    fp, fm = go.flux_2d_x_grid(g)
    fpw, fmw = go.flux_2d_x_weighted_grid(g, g.rho, g.rho)
    assert fpw == pytest.approx(fp, rel=1e-13, abs=1e-13)
    assert fmw == pytest.approx(fm, rel=1e-13, abs=1e-13)


def test_speed_2d_grid_matches_scalar(rng):
    m2 = _batch_2d(rng, n=60)
    g = go.invert_2d_grid(m2)
    sx, sy = go.speed_2d_grid(g)
    for i in range(m2.shape[0]):
        ref = max_speed_2d(invert_2d(BivariateMoments(m2[i])))
        assert sx[i] == pytest.approx(ref[0], rel=1e-6, abs=1e-12)
        assert sy[i] == pytest.approx(ref[1], rel=1e-6, abs=1e-12)


def test_evaluate_2d_grid_reproduces_matched(rng):
    from gqmom.ecqmom2d import MATCHED_2D
    m2 = _batch_2d(rng, n=60)
    g = go.invert_2d_grid(m2)
    rec = go.evaluate_2d_grid(g)
    idx = [LOOKUP_2D[ij] for ij in MATCHED_2D]
    scale = np.maximum(np.abs(m2), np.maximum(m2[:, :1], 1e-12))
    assert np.max(np.abs(rec[:, idx] - m2[:, idx]) / scale[:, idx]) < 1e-7


class TestDragExact:
    def test_1d_matches_matrix_exponential(self, rng):
        for _ in range(20):
            m = forward_moments_1d(*sample_two_node_params(rng))[None, :]
            tau = rng.uniform(0.1, 5.0)
            u_g = rng.uniform(-2.0, 2.0)
            dt = rng.uniform(0.01, 2.0)
            gen = np.zeros((5, 5))
            for k in range(1, 5):
                gen[k, k] = -k / tau
                gen[k, k - 1] = k * u_g / tau
            ref = expm(gen * dt) @ m[0]
            got = go.drag_exact_1d(m, np.array([u_g]), math.exp(-dt / tau))[0]
            scale = np.maximum(np.abs(ref), 1.0)
            assert np.max(np.abs(got - ref) / scale) < 1e-12

    def test_2d_matches_matrix_exponential(self, rng):
        m = evaluate_all_2d(random_cond_params(rng))[None, :]
        tau, u_g, v_g, dt = 0.8, 0.4, -0.3, 0.35
        gen = np.zeros((16, 16))
        for k, (i, j) in enumerate(INDEX_2D):
            gen[k, k] = -(i + j) / tau
            if i >= 1:
                gen[k, LOOKUP_2D[(i - 1, j)]] = i * u_g / tau
            if j >= 1:
                gen[k, LOOKUP_2D[(i, j - 1)]] = j * v_g / tau
        ref = expm(gen * dt) @ m[0]
        got = go.drag_exact_2d(m, np.array([u_g]), np.array([v_g]),
                               math.exp(-dt / tau))[0]
        scale = np.maximum(np.abs(ref), 1.0)
        assert np.max(np.abs(got - ref) / scale) < 1e-12

    def test_limits(self, rng):
        m = forward_moments_1d(*sample_two_node_params(rng))[None, :]
        # tau -> inf: identity.
        out = go.drag_exact_1d(m, np.array([0.7]), decay=1.0)
        assert out == pytest.approx(m, rel=1e-15)
        # dt/tau -> inf: fully relaxed monokinetic state at u_g.
        out = go.drag_exact_1d(m, np.array([0.7]), decay=0.0)
        assert out[0] == pytest.approx(m[0, 0] * 0.7 ** np.arange(5), rel=1e-13)
