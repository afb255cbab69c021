"""Conditional bivariate reconstruction."""

import math

import numpy as np
import pytest

from gqmom.ecqmom2d import (CLOSED_2D, INDEX_2D, LOOKUP_2D, MATCHED_2D,
                            BivariateMoments, dual_quadrature_2d,
                            evaluate_all_2d, evaluate_moments_2d, invert_2d,
                            kernel_integral_2d, kernel_integral_2d_avg,
                            regress_V, uV_moments)
from gqmom.eqmom1d import gauss_hermite

from conftest import gauss2d_moments, random_cond_params


class TestBivariateMoments:
    def test_canonical_order_is_closed_under_swap(self):
        swapped = {(j, i) for (i, j) in INDEX_2D}
        assert swapped == set(INDEX_2D)

    def test_swap_involution(self, rng):
        m = BivariateMoments(rng.uniform(0.5, 2.0, 16))
        assert np.array_equal(m.swapped().swapped().m, m.m)

    def test_derived_stats(self):
        m = gauss2d_moments(0.3, -0.2, 1.1, 0.8, 0.6)
        assert m.mean_u == pytest.approx(0.3)
        assert m.mean_v == pytest.approx(-0.2)
        assert m.var_u == pytest.approx(1.21)
        assert m.var_v == pytest.approx(0.64)
        assert m.corr == pytest.approx(0.6)


class TestRegressV:
    def test_uncorrelated_zero_slope(self):
        m = gauss2d_moments(0.0, 0.5, 1.0, 1.0, 0.0)
        a0, a1, flagged = regress_V(m)
        assert not flagged
        assert a1 == pytest.approx(0.0, abs=1e-14)
        assert a0 == pytest.approx(0.5)

    def test_regression_identity(self):
        m = gauss2d_moments(0.0, 0.0, 1.0, 1.0, 0.5)
        a0, a1, _ = regress_V(m)
        assert a1 == pytest.approx(0.5)
        assert a0 == pytest.approx(0.0, abs=1e-14)

    def test_defining_identities_random(self, rng):
        # The reconstruction must reproduce M01 and M11 exactly through V.
        for _ in range(50):
            p = random_cond_params(rng)
            m = BivariateMoments(evaluate_all_2d(p))
            a0, a1, _ = regress_V(m)
            scale = max(abs(m.get(0, 1)), abs(m.get(1, 1)), m.m00)
            lhs01 = sum(p.rho[al] * (a0 + a1 * p.u[al]) for al in range(2))
            lhs11 = sum(p.rho[al] * (a0 * p.u[al]
                                     + a1 * (p.u[al]**2 + p.sigma1**2))
                        for al in range(2))
            assert abs(lhs01 - m.get(0, 1)) <= 1e-10 * scale
            assert abs(lhs11 - m.get(1, 1)) <= 1e-10 * scale

    def test_degenerate_variance_flagged(self):
        vals = {(i, j): (0.7**i) * ((0.2) ** j) for (i, j) in INDEX_2D}
        m = BivariateMoments.from_dict(vals)
        a0, a1, flagged = regress_V(m)
        assert flagged
        assert a1 == 0.0
        assert a0 == pytest.approx(0.2)


class TestUVMoments:
    def test_trivial_entries(self):
        table = uV_moments(0.4, 0.8, a0=0.3, a1=-0.7, imax=2, jmax=2)
        assert table[0, 0] == pytest.approx(1.0)

    def test_zero_slope_reduces_to_gaussian_moments(self):
        from gqmom.moments import gaussian_moments
        g = gaussian_moments(0.4, 0.8, 4)
        table = uV_moments(0.4, 0.8, a0=0.3, a1=0.0, imax=2, jmax=2)
        for i in range(3):
            for j in range(3):
                assert table[i, j] == pytest.approx(0.3**j * g[i], rel=1e-13)

    def test_against_quadrature_oracle(self):
        from scipy.integrate import quad
        u_c, s1, a0, a1 = 0.4, 0.8, 0.3, -0.7
        table = uV_moments(u_c, s1, a0, a1, imax=2, jmax=3)
        for i in range(3):
            for j in range(4):
                ref = quad(
                    lambda u: u**i * (a0 + a1 * u) ** j
                    * math.exp(-0.5 * ((u - u_c) / s1) ** 2)
                    / (s1 * math.sqrt(2 * math.pi)),
                    -np.inf, np.inf, limit=200)[0]
                assert table[i, j] == pytest.approx(ref, rel=1e-10, abs=1e-12)


class TestInvert2D:
    def test_isotropic_gaussian_degenerate(self):
        m = gauss2d_moments(0.0, 0.0, 1.0, 1.0, 0.0)
        p = invert_2d(m)
        assert p.mode == "degenerate"
        assert p.rho_in[0, 0] == pytest.approx(1.0)
        assert p.sigma2[0] ** 2 == pytest.approx(1.0, rel=1e-10)

    def test_correlated_gaussian_conditional_variance(self):
        m = gauss2d_moments(0.0, 0.0, 1.0, 1.0, 0.6)
        p = invert_2d(m)
        assert p.mode == "degenerate"
        assert p.sigma2[0] ** 2 == pytest.approx(1.0 - 0.36, rel=1e-10)

    def test_anisotropic_gaussian_all16(self, rng):
        for _ in range(20):
            m = gauss2d_moments(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0),
                                rng.uniform(-0.8, 0.8))
            p = invert_2d(m)
            rec = evaluate_all_2d(p)
            scale = np.maximum(np.abs(m.m), m.m00)
            assert np.max(np.abs(rec - m.m) / scale) < 1e-10

    def test_round_trip_nondegenerate(self, rng):
        for _ in range(200):
            ptrue = random_cond_params(rng)
            m = BivariateMoments(evaluate_all_2d(ptrue))
            p = invert_2d(m)
            assert p.mode == "nondegenerate"
            assert p.rho == pytest.approx(ptrue.rho, rel=1e-7)
            assert p.u == pytest.approx(ptrue.u, rel=1e-7, abs=1e-7)
            assert p.sigma1 == pytest.approx(ptrue.sigma1, rel=1e-7)
            assert p.a0 == pytest.approx(ptrue.a0, rel=1e-7, abs=1e-9)
            assert p.a1 == pytest.approx(ptrue.a1, rel=1e-7, abs=1e-9)
            assert p.rho_in == pytest.approx(ptrue.rho_in, rel=1e-6, abs=1e-7)
            assert p.v_in == pytest.approx(ptrue.v_in, rel=1e-6, abs=1e-7)
            assert p.sigma2 == pytest.approx(ptrue.sigma2, rel=1e-6)

    def test_thirteen_matched_three_closed(self, rng):
        matched_idx = [LOOKUP_2D[ij] for ij in MATCHED_2D]
        closed_idx = [LOOKUP_2D[ij] for ij in CLOSED_2D]
        assert len(matched_idx) == 13 and len(closed_idx) == 3
        any_closure_gap = 0.0
        for _ in range(100):
            ptrue = random_cond_params(rng)
            m = evaluate_all_2d(ptrue)
            # Perturb the closed moments: they must not affect the
            # reconstruction, which never reads them.
            m2 = m.copy()
            m2[closed_idx] *= 1.1
            p = invert_2d(BivariateMoments(m2))
            rec = evaluate_all_2d(p)
            scale = np.maximum(np.abs(m), m[0])
            assert np.max(np.abs(rec[matched_idx] - m[matched_idx])
                          / scale[matched_idx]) < 1e-8
            any_closure_gap = max(any_closure_gap,
                                  np.max(np.abs(rec[closed_idx] - m2[closed_idx])
                                         / scale[closed_idx]))
        assert any_closure_gap > 1e-6  # they are closures, not constraints

    def test_conditional_mean_invariants(self, rng):
        # mu_a^0 = 1 and mu_a^1 = 0 after every inversion.
        for _ in range(50):
            m = BivariateMoments(evaluate_all_2d(random_cond_params(rng)))
            p = invert_2d(m)
            for al in range(2):
                assert np.sum(p.rho_in[al]) == pytest.approx(1.0, rel=1e-12)
                assert np.sum(p.rho_in[al] * p.v_in[al]) == pytest.approx(
                    0.0, abs=1e-10)

    def test_permutation_consistency_gaussian(self, rng):
        for _ in range(20):
            m = gauss2d_moments(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5),
                                rng.uniform(-0.7, 0.7))
            p12 = invert_2d(m)
            p21 = invert_2d(m.swapped())
            rec12 = evaluate_all_2d(p12)
            rec21 = evaluate_all_2d(p21)[np.array(
                [LOOKUP_2D[(j, i)] for (i, j) in INDEX_2D])]
            scale = np.maximum(np.abs(m.m), m.m00)
            assert np.max(np.abs(rec12 - rec21) / scale) < 1e-9

    def test_vacuum(self):
        p = invert_2d(BivariateMoments(np.zeros(16)))
        assert p.mode == "vacuum"
        assert np.all(p.rho == 0.0)

    def test_monokinetic(self):
        vals = {(i, j): 2.0 * 0.7**i * (-0.4) ** j for (i, j) in INDEX_2D}
        p = invert_2d(BivariateMoments.from_dict(vals))
        assert p.mode == "degenerate"
        assert p.rho[0] == pytest.approx(2.0)
        assert p.u[0] == pytest.approx(0.7)
        assert p.sigma1 == pytest.approx(0.0, abs=1e-9)
        assert evaluate_moments_2d(p, 0, 1) == pytest.approx(-0.8, rel=1e-12)


class TestEvaluate:
    def test_m00_and_m01(self, rng):
        p = random_cond_params(rng)
        m00 = np.sum(p.rho)
        assert evaluate_moments_2d(p, 0, 0) == pytest.approx(m00, rel=1e-13)
        # (0,1) equals the V-weighted mass by the conditional-mean property.
        expect = sum(p.rho[al] * (p.a0 + p.a1 * p.u[al]) for al in range(2))
        assert evaluate_moments_2d(p, 0, 1) == pytest.approx(expect, rel=1e-12)

    def test_against_2d_quadrature_oracle(self, rng):
        from scipy.integrate import dblquad
        p = random_cond_params(rng)

        def ndf(v, u):
            out = 0.0
            for al in range(2):
                gu = math.exp(-0.5 * ((u - p.u[al]) / p.sigma1) ** 2) \
                    / (p.sigma1 * math.sqrt(2 * math.pi))
                inner = 0.0
                for be in range(2):
                    y = v - (p.a0 + p.a1 * u) - p.v_in[al, be]
                    inner += p.rho_in[al, be] \
                        * math.exp(-0.5 * (y / p.sigma2[al]) ** 2) \
                        / (p.sigma2[al] * math.sqrt(2 * math.pi))
                out += p.rho[al] * gu * inner
            return out

        for (i, j) in [(2, 2), (1, 3), (4, 1)]:
            ref = dblquad(lambda v, u: u**i * v**j * ndf(v, u),
                          -12, 12, -12, 12, epsabs=1e-9)[0]
            assert evaluate_moments_2d(p, i, j) == pytest.approx(
                ref, rel=1e-7, abs=1e-8)


class TestIntegrals:
    def test_mass_and_conditional_first_moment(self, rng):
        p = random_cond_params(rng)
        rule = gauss_hermite(6)
        assert kernel_integral_2d(p, lambda u, v: np.ones_like(u), rule) \
            == pytest.approx(np.sum(p.rho), rel=1e-12)
        # v - V(u) integrates to zero (inner means vanish).
        val = kernel_integral_2d(p, lambda u, v: v - (p.a0 + p.a1 * u), rule)
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_u2v2_vs_evaluate(self, rng):
        p = random_cond_params(rng)
        rule = gauss_hermite(8)
        val = kernel_integral_2d(p, lambda u, v: u * u * v * v, rule)
        assert val == pytest.approx(evaluate_moments_2d(p, 2, 2), rel=1e-12)

    def test_dual_quadrature_mass(self, rng):
        p = random_cond_params(rng)
        w, u, v = dual_quadrature_2d(p, gauss_hermite(4))
        assert np.sum(w) == pytest.approx(np.sum(p.rho), rel=1e-12)
        assert np.sum(w * u) == pytest.approx(
            evaluate_moments_2d(p, 1, 0), rel=1e-12)

    def test_permutation_average(self, rng):
        m = gauss2d_moments(0.2, -0.1, 1.0, 0.7, 0.4)
        rule = gauss_hermite(8)
        val = kernel_integral_2d_avg(m, lambda u, v: u * u + v * v, rule)
        expect = m.get(2, 0) + m.get(0, 2)
        assert val == pytest.approx(expect, rel=1e-10)
