import numpy as np
import pytest

from hdgflow import physics as ph
from hdgflow.errors import DegenerateState
from hdgflow.riemann import (KINDS, RiemannScheme, dg_reference_flux, entropy_fix_eigs,
                             hllem_theta, parse_scheme, stabilization_tau, trace_flux, wave_speeds)
from conftest import random_normals, random_states

G = 1.4
GAS = ph.GasModel()
REST = np.array([1.0, 0, 0, 1 / (G * (G - 1))])  # c = 1
EX = np.array([1.0, 0.0])


def moving(un, ut=0.0):
    """State with unit sound speed and velocity ``(un, ut)``."""
    return ph.conservative(1.0, np.array([un, ut]), 1 / G, G)


def min_eig_sym(M):
    return np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2))).min()


class TestParse:
    @pytest.mark.parametrize("text,kind,delta,theta0", [
        ("lf", "lf", 0, 1e-8), ("Roe:0.1", "roe", 0.1, 1e-8), ("hllem:0.05", "hllem", 0, 0.05),
        ("lax-friedrichs", "lf", 0, 1e-8), ("hlle", "hlle", 0, 1e-8)])
    def test_parse(self, text, kind, delta, theta0):
        s = parse_scheme(text)
        assert (s.kind, s.delta, s.theta0) == (kind, delta, theta0)

    @pytest.mark.parametrize("text", ["ausm", "hll:0.3", "roe:-1", "hllem:2"])
    def test_reject(self, text):
        with pytest.raises(ValueError):
            parse_scheme(text)

    def test_str_roundtrip(self):
        for t in ("lf", "roe", "roe:0.5", "hll", "hllem", "hllem:0.1"):
            assert str(parse_scheme(t)) == t


class TestTau:
    def test_lf_rest(self):
        np.testing.assert_allclose(stabilization_tau(RiemannScheme("lf"), REST, EX, GAS),
                                   np.eye(4), atol=1e-14)

    def test_hll_value(self):
        tau = stabilization_tau(RiemannScheme("hll"), moving(0.5), EX, GAS)
        np.testing.assert_allclose(tau, 1.5 * np.eye(4), rtol=1e-14)

    def test_hllem_theta_floor(self):
        sch = RiemannScheme("hllem", theta0=1e-3)
        U = moving(0.0, 0.3)
        tau = stabilization_tau(sch, U, EX, GAS)
        R, _, L = ph.eigendecompose(U, EX, GAS)
        expect = 1.0 * R @ np.diag([1, 1e-3, 1e-3, 1]) @ L
        np.testing.assert_allclose(tau, expect, atol=1e-13)
        assert hllem_theta(U, EX, G, sch) == pytest.approx(1e-3)

    def test_roe_is_abs_jacobian(self):
        U = moving(0.4, -0.2)
        np.testing.assert_allclose(stabilization_tau(RiemannScheme("roe"), U, EX, GAS),
                                   ph.abs_jacobian(U, EX, G), atol=1e-13)

    def test_hll_supersonic_inflow_flag(self):
        tau, flag = stabilization_tau(RiemannScheme("hll"), moving(-2.0), EX, GAS, return_flag=True)
        assert flag and np.all(tau == 0)

    def test_degenerate(self):
        with pytest.raises(DegenerateState):
            stabilization_tau(RiemannScheme("roe"), np.array([1.0, 2, 0, 1]), EX, GAS)


class TestEntropyFix:
    def test_zero_delta(self):
        lam = np.array([-0.3, 0, 0.2, 1.2])
        np.testing.assert_array_equal(entropy_fix_eigs(lam, 0.0), np.abs(lam))

    def test_value(self):
        np.testing.assert_allclose(entropy_fix_eigs(np.array([-0.05, 0, 0, 1.9]), 0.1),
                                   [0.1, 0.1, 0.1, 1.9])

    def test_saturation(self):
        U = moving(0.3, 0.1)
        lam_max = 1.3
        tau = stabilization_tau(RiemannScheme("roe", delta=lam_max), U, EX, GAS)
        np.testing.assert_allclose(tau, lam_max * np.eye(4), atol=1e-12)


class TestTraceFlux:
    @pytest.mark.parametrize("kind", KINDS)
    def test_consistency(self, rng, kind):
        U = random_states(rng, 200)
        n = random_normals(rng, 200)
        F = trace_flux(U, U, n, RiemannScheme(kind), GAS)
        np.testing.assert_allclose(F, ph.normal_flux(U, n, G), atol=1e-13, rtol=0)

    def test_lf_jump(self):
        eps = 1e-3
        u_e = REST + np.array([eps, 0, 0, 0])
        F = trace_flux(REST, u_e, EX, RiemannScheme("lf"), GAS)
        np.testing.assert_allclose(F, ph.normal_flux(REST, EX, G) + [eps, 0, 0, 0], atol=1e-15)

    @pytest.mark.parametrize("kind", ["lf", "roe"])
    def test_two_sided_matches_dg_flux_to_second_order(self, rng, kind):
        # with u_hat the mean state the one-sided trace flux differs from the
        # two-state flux only through the nonlinearity of F: O(jump^2)
        sch = RiemannScheme(kind)
        base = random_states(rng, 20, mach_max=0.8)
        n = random_normals(rng, 20)
        w = rng.normal(size=base.shape) * 0.05 * base
        errs = []
        for a in (1.0, 0.5):
            up, um = base + a * w, base - a * w
            uh = 0.5 * (up + um)
            errs.append(np.abs(trace_flux(uh, up, n, sch, GAS) - dg_reference_flux(up, um, n, sch, GAS)).max())
        assert errs[1] < errs[0] / 3.5


class TestDGReference:
    @pytest.mark.parametrize("kind", KINDS)
    def test_equal_states(self, rng, kind):
        U = random_states(rng, 20)
        n = random_normals(rng, 20)
        np.testing.assert_allclose(dg_reference_flux(U, U, n, RiemannScheme(kind), GAS),
                                   ph.normal_flux(U, n, G), atol=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_conservation(self, rng, kind):
        up, um = random_states(rng, 20), random_states(rng, 20)
        n = random_normals(rng, 20)
        sch = RiemannScheme(kind)
        np.testing.assert_allclose(dg_reference_flux(up, um, n, sch, GAS),
                                   -dg_reference_flux(um, up, -n, sch, GAS), atol=1e-11)

    def test_hll_supersonic_upwind(self):
        up, um = moving(2.5), moving(2.2)
        F = dg_reference_flux(up, um, EX, RiemannScheme("hll"), GAS)
        np.testing.assert_allclose(F, ph.normal_flux(up, EX, G), atol=1e-13)


class TestWaveSpeeds:
    def test_supersonic(self):
        assert wave_speeds(moving(2.0), EX, GAS) == pytest.approx((3.0, 0.0))
        assert wave_speeds(moving(-2.0), EX, GAS) == pytest.approx((0.0, -3.0))

    def test_hlle_takes_max(self):
        uh, up = moving(0.2), moving(0.9)
        sp, _ = wave_speeds(uh, EX, GAS, "hlle", u_plus=up, u_minus=moving(0.1))
        assert sp == pytest.approx(1.9)


class TestDissipationOrdering:
    @pytest.mark.parametrize("pair", [("lf", "roe"), ("hll", "hllem")])
    def test_psd_difference(self, rng, pair):
        U = random_states(rng, 300)
        n = random_normals(rng, 300)
        a, b = (stabilization_tau(RiemannScheme(k), U, n, GAS) for k in pair)
        # |A_n| and theta-scaled forms are self-adjoint in the characteristic inner product
        R, _, L = ph.eigendecompose(U, n, GAS)
        D = np.einsum("kij,kjl,klm->kim", L, a - b, R)
        assert min(min_eig_sym(d) for d in D) >= -1e-12
