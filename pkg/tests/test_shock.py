import math
import warnings

import numpy as np
import pytest

from hdgflow import physics as ph
from hdgflow.basis import dubiner, mode_indices, reference_element, triangle_quadrature
from hdgflow.boundary import FarField, InviscidWall
from hdgflow.cases import freestream_state
from hdgflow.errors import ConfigError, DegenerateThresholds, ZeroField
from hdgflow.hdg import Discretization
from hdgflow.mesh import unit_square
from hdgflow.riemann import parse_scheme
from hdgflow.shock import (SensorConfig, ShockCapture, bulk_viscosity_elemental, bulk_viscous_flux,
                           c0_smooth, dilatation_sensor, hat_values, laplacian_term, persson_sensor,
                           viscosity_ramp)

G = 1.4


def closed_form_ramp(s, k, eps0):
    """Piecewise ramp written independently of the implementation."""
    lo, hi = -11 * math.log10(k), -4 * math.log10(k)
    s0, xi = 0.5 * (lo + hi), 0.5 * (hi - lo)
    if s < s0 - xi:
        return 0.0
    if s > s0 + xi:
        return eps0
    return 0.5 * eps0 * (1 + math.sin(math.pi * (s - s0) / (2 * xi)))


class TestPersson:
    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_lower_degree_field(self, rng, k):
        ref = reference_element(k)
        x, y = ref.nodes.T
        coeffs = rng.normal(size=(k, k))
        rho = 1 + sum(coeffs[i, j] * x ** i * y ** j for i in range(k) for j in range(k - i))
        assert persson_sensor(rho, ref.V, ref.P) < 1e-13

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_top_mode(self, k):
        ref = reference_element(k)
        modes = mode_indices(k)
        top = [m for m, (i, j) in enumerate(modes) if i + j == k][0]
        rho = ref.V[:, top]
        assert persson_sensor(rho, ref.V, ref.P) == pytest.approx(1.0, abs=1e-13)

    def test_matches_brute_force(self, rng):
        k = 3
        ref = reference_element(k)
        qp, qw = triangle_quadrature(2 * k)
        psi, _ = dubiner(k, qp)
        N, _ = ref.basis.tabulate(qp)
        top = [m for m, (i, j) in enumerate(mode_indices(k)) if i + j == k]
        for alpha in rng.uniform(0.01, 2, 5):
            rho = 1 + 0.3 * ref.nodes[:, 0] + alpha * ref.V[:, top[1]]
            rq = N @ rho
            a = psi.T @ (qw * rq)
            expect = np.sum(a[top] ** 2) / np.sum(a ** 2)
            assert persson_sensor(rho, ref.V, ref.P) == pytest.approx(expect, abs=1e-12)

    def test_batched(self, rng):
        ref = reference_element(2)
        rho = rng.uniform(1, 2, (4, 3, ref.n_en))
        S = persson_sensor(rho, ref.V, ref.P)
        assert S.shape == (4, 3)
        assert S[2, 1] == pytest.approx(persson_sensor(rho[2, 1], ref.V, ref.P))

    def test_zero_field(self):
        ref = reference_element(2)
        with pytest.raises(ZeroField):
            persson_sensor(np.zeros(ref.n_en), ref.V, ref.P)


class TestRamp:
    def test_window_k4(self):
        s0, xi = SensorConfig().ramp_window(4)
        assert s0 - xi == pytest.approx(-6.623, abs=1e-3)
        assert s0 + xi == pytest.approx(-2.408, abs=1e-3)
        assert viscosity_ramp(-10.0, 4, 0.7) == 0.0

    def test_midpoint_and_top(self):
        s0, _ = SensorConfig().ramp_window(3)
        assert viscosity_ramp(s0, 3, 0.8) == pytest.approx(0.4, rel=1e-14)
        assert viscosity_ramp(0.0, 3, 0.8) == 0.8

    @pytest.mark.parametrize("k", [2, 3, 4, 6])
    def test_closed_form_sampled(self, rng, k):
        s = rng.uniform(-15, 2, 10_000)
        got = viscosity_ramp(s, k, 0.25)
        expect = np.array([closed_form_ramp(v, k, 0.25) for v in s])
        np.testing.assert_allclose(got, expect, rtol=1e-14, atol=0)

    def test_monotone_and_continuous(self):
        s0, xi = SensorConfig().ramp_window(3)
        s = np.linspace(-12, 1, 5001)
        e = viscosity_ramp(s, 3, 1.0)
        assert np.all(np.diff(e) >= 0)
        for edge in (s0 - xi, s0 + xi):
            a, b = viscosity_ramp(np.array([edge - 1e-9, edge + 1e-9]), 3, 1.0)
            assert abs(a - b) < 1e-8

    def test_k1_degenerate(self):
        with pytest.warns(DegenerateThresholds):
            e = viscosity_ramp(np.array([0.0, -1.0]), 1, 1.0)
        np.testing.assert_array_equal(e, 0)


class TestBulk:
    def test_dilatation_sensor(self):
        assert dilatation_sensor(0.0, 0.1, 4, 1.0) == 0.0
        assert dilatation_sensor(1.0, 0.1, 4, 1.0) < 0
        assert dilatation_sensor(-8.0, 0.1, 4, 1.0) == pytest.approx(0.2)

    def test_clamps(self):
        gas = ph.GasModel(mach_inf=0.5)
        assert bulk_viscosity_elemental(0.005, 0.1, 2, gas) == 0.0
        assert bulk_viscosity_elemental(-3.0, 0.1, 2, gas) == 0.0
        big = bulk_viscosity_elemental(1e6, 0.1, 2, gas)
        smax = 2 / math.sqrt(G ** 2 - 1)
        assert smax == pytest.approx(2.041241, abs=1e-6)
        assert big == pytest.approx(1.5 * 0.05 * math.sqrt(1 + 4) * smax)

    def test_bulk_flux(self):
        U = ph.conservative(1.0, np.array([1.0, 0]), 1.0, G)
        zero = bulk_viscous_flux(U, np.zeros(2), 0.0, -1.0)
        np.testing.assert_array_equal(zero, 0)
        Gs = bulk_viscous_flux(U, np.zeros(2), 1.0, -1.0)
        np.testing.assert_allclose(Gs[1:3], -np.eye(2), atol=1e-15)
        np.testing.assert_allclose(Gs[3], [-1, 0], atol=1e-15)
        np.testing.assert_array_equal(Gs[0], 0)
        np.testing.assert_allclose(bulk_viscous_flux(U, np.ones(2), 2.5, -1.0),
                                   2.5 * bulk_viscous_flux(U, np.ones(2), 1.0, -1.0))


class TestSmoothing:
    def test_uniform(self):
        m = unit_square(3)
        c = c0_smooth(np.full(m.n_elements, 0.3), m)
        np.testing.assert_array_equal(c, 0.3)

    def test_single_element_support(self):
        m = unit_square(4)
        e0 = 13
        eps = np.zeros(m.n_elements)
        eps[e0] = 1.0
        corner = c0_smooth(eps, m)
        verts = set(m.elements[e0, :3])
        touching = [e for e in range(m.n_elements) if verts & set(m.elements[e, :3])]
        assert np.all(corner[touching].max(axis=1) == 1.0)
        others = [e for e in range(m.n_elements) if e not in touching]
        assert np.all(corner[others] == 0.0)

    def test_continuity_across_faces(self, rng):
        m = unit_square(3)
        ref = reference_element(2)
        d = Discretization(m, 2, ph.GasModel(), parse_scheme("hll"), {t: InviscidWall() for t in m.tag_names})
        corner = c0_smooth(rng.uniform(0, 1, m.n_elements), m)
        sk = d.skeleton
        from hdgflow.basis import face_points
        for f in np.flatnonzero(sk.face_elem[:, 1] >= 0):
            (el, er), (fl, fr) = sk.face_elem[f], sk.face_local[f]
            xl = d.xf[el, fl]
            vl = hat_values(corner[[el]], face_points(fl, ref.fq_t))[0]
            vr_all = hat_values(corner[[er]], face_points(fr, ref.fq_t))[0]
            xr = d.xf[er, fr]
            order = [int(np.argmin(np.linalg.norm(xr - p, axis=1))) for p in xl]
            assert np.abs(vl - vr_all[order]).max() < 1e-12


class TestLaplacian:
    def setup_method(self):
        self.ref = reference_element(2)

    def test_zero_viscosity_and_constant_state(self, rng):
        ref = self.ref
        wdet = ref.qw[None]
        gW = ref.dN[None]
        gU = rng.normal(size=(1, len(ref.qp), 4, 2))
        assert np.all(laplacian_term(gU, np.zeros((1, len(ref.qp))), gW, wdet) == 0)
        U = np.tile(rng.normal(size=4), (ref.n_en, 1))
        gUc = np.einsum("qaj,ac->qcj", ref.dN, U)[None]
        assert np.abs(laplacian_term(gUc, np.ones((1, len(ref.qp))), gW, wdet)).max() < 1e-12

    def test_quadratic_field(self):
        # U = x^2 + y^2 (all components), eps = 1: (grad W_a, grad U) against exact integration
        ref = self.ref
        x, y = ref.nodes.T
        U = np.repeat((x ** 2 + y ** 2)[:, None], 4, axis=1)
        gU = np.einsum("qaj,ac->qcj", ref.dN, U)[None]
        got = laplacian_term(gU, np.ones((1, len(ref.qp))), ref.dN[None], ref.qw[None])[0, :, 0]
        qp, qw = triangle_quadrature(8)
        N, dN = ref.basis.tabulate(qp)
        exact = np.einsum("q,qaj,qj->a", qw, dN, 2 * qp)
        np.testing.assert_allclose(got, exact, atol=1e-13)


class TestShockCapture:
    def test_freestream_reads_zero(self):
        gas = ph.GasModel(mach_inf=2.0)
        U0 = freestream_state(gas, 5.0)
        m = unit_square(3)
        d = Discretization(m, 3, gas, parse_scheme("hll"), {t: FarField(U0) for t in m.tag_names})
        sc = ShockCapture(SensorConfig(mode="laplacian"))
        st = d.uniform_state(U0)
        eps, S = sc.elemental(d, st)
        assert np.all(S < 1e-13)
        assert np.all(eps == 0)
        assert np.all(sc.viscosity(d, st).lap_q == 0)

    def test_discontinuity_triggers(self):
        gas = ph.GasModel(mach_inf=2.0)
        m = unit_square(4)
        d = Discretization(m, 3, gas, parse_scheme("hll"), {t: InviscidWall() for t in m.tag_names})
        fun = lambda x: ph.conservative(np.where(x[..., 0] < 0.4, 1.0, 3.0), np.zeros(x.shape), 1.0, G)
        sc = ShockCapture(SensorConfig(mode="laplacian", relax=1.0))
        eps, S = sc.elemental(d, d.state_from_function(fun))
        cut = np.any(np.abs(d.node_coords[..., 0] - 0.4) < 0.125, axis=1)
        assert eps[cut].max() > 0 and eps[~cut].max() == 0

    def test_relaxation(self):
        gas = ph.GasModel(mach_inf=2.0)
        m = unit_square(2)
        d = Discretization(m, 2, gas, parse_scheme("hll"), {t: InviscidWall() for t in m.tag_names})
        fun = lambda x: ph.conservative(np.where(x[..., 0] < 0.3, 1.0, 4.0), np.zeros(x.shape), 1.0, G)
        st = d.state_from_function(fun)
        sc = ShockCapture(SensorConfig(mode="laplacian", relax=0.25))
        first = sc.viscosity(d, st).lap_q
        peek = sc.viscosity(d, st, commit=False).lap_q
        np.testing.assert_allclose(peek, first)
        sc.reset()
        assert sc.last_elemental is None

    def test_mode_checks(self):
        m = unit_square(1)
        gas = ph.GasModel(reynolds=10)
        d = Discretization(m, 2, gas, parse_scheme("hll"), {t: InviscidWall() for t in m.tag_names})
        with pytest.raises(ConfigError):
            ShockCapture(SensorConfig(mode="laplacian")).check(d)
        d2 = Discretization(m, 2, ph.GasModel(), parse_scheme("hll"), {t: InviscidWall() for t in m.tag_names})
        with pytest.raises(ConfigError):
            ShockCapture(SensorConfig(mode="bulk")).check(d2)

    @pytest.mark.parametrize("kw", [dict(mode="artificial"), dict(window_low=3.0), dict(relax=0.0),
                                    dict(pr_beta=0.0), dict(eps0=-1.0)])
    def test_config_validation(self, kw):
        with pytest.raises(ConfigError):
            SensorConfig(**kw)
