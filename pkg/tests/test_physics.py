import math

import numpy as np
import pytest

from hdgflow import physics as ph
from hdgflow.errors import DegenerateState, InviscidModel, NonPositiveDensity, NonPositiveTemperature
from conftest import random_normals, random_states

G = 1.4
GAS = ph.GasModel()


def rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


class TestPrimitives:
    def test_rest_state_unit_sound_speed(self):
        pr = ph.primitives(np.array([1.0, 0, 0, 1 / (G * (G - 1))]), GAS)
        assert pr.p == pytest.approx(1 / G, rel=1e-14)
        assert pr.T == pytest.approx(1 / (G - 1), rel=1e-14)
        assert pr.c == pytest.approx(1.0, rel=1e-14)

    def test_pressure_at_rest(self):
        pr = ph.primitives(np.array([1.0, 0, 0, 1]), GAS)
        assert pr.p == pytest.approx(0.4, rel=1e-14)
        np.testing.assert_array_equal(pr.v, [0, 0])

    def test_moving_state(self):
        pr = ph.primitives(np.array([2.0, 2, 0, 3]), GAS)
        np.testing.assert_allclose(pr.v, [1, 0])
        assert pr.p == pytest.approx(0.8, rel=1e-14)
        assert pr.c == pytest.approx(0.748331, abs=1e-6)

    def test_nonpositive_density_raises(self):
        with pytest.raises(NonPositiveDensity):
            ph.primitives(np.array([0.0, 0, 0, 1]), GAS)

    def test_negative_pressure_flagged(self):
        pr = ph.primitives(np.array([1.0, 2, 0, 1]), GAS)
        assert not pr.admissible
        assert np.isnan(pr.c)

    def test_conservative_roundtrip(self, rng):
        U = random_states(rng, 50)
        pr = ph.primitives(U, GAS)
        np.testing.assert_allclose(ph.conservative(pr.rho, pr.v, pr.p, G), U, rtol=1e-13)


class TestInviscidFlux:
    def test_rest_state(self):
        U = np.array([1.3, 0, 0, 2.0])
        F = ph.inviscid_flux(U, G)
        p = ph.pressure(U, G)
        np.testing.assert_array_equal(F[0], 0)
        np.testing.assert_array_equal(F[3], 0)
        np.testing.assert_allclose(F[1:3], p * np.eye(2))

    def test_normal_flux_value(self):
        Fn = ph.normal_flux(np.array([1.0, 1, 0, 1]), np.array([1.0, 0]), G)
        np.testing.assert_allclose(Fn, [1, 1.2, 0, 1.2], rtol=1e-14)

    @pytest.mark.parametrize("angle", [0.3, 1.7, -2.4])
    def test_rotational_covariance(self, rng, angle):
        R = rot(angle)
        U = random_states(rng, 10)
        n = random_normals(rng, 10)
        RU = U.copy()
        RU[:, 1:3] = U[:, 1:3] @ R.T
        lhs = ph.normal_flux(RU, n, G)
        rhs = ph.normal_flux(U, n @ R, G)
        rhs[:, 1:3] = rhs[:, 1:3] @ R.T
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestViscousFlux:
    def test_zero_gradients(self):
        gas = ph.GasModel(reynolds=10)
        G_ = ph.viscous_flux(np.array([1.0, 1, 0, 20]), np.zeros(3), np.zeros(2), gas)
        np.testing.assert_array_equal(G_, 0)

    def test_identity_strain(self):
        gas = ph.GasModel(reynolds=10, viscosity_law="constant")
        U = ph.conservative(1.0, np.array([1.0, 0]), 1.0, G)
        G_ = ph.viscous_flux(U, np.array([1.0, 1, 0]), np.zeros(2), gas)
        np.testing.assert_allclose(G_[1:3], 0.1 * np.eye(2), rtol=1e-14)
        np.testing.assert_allclose(G_[3], [0.1, 0], rtol=1e-14)
        np.testing.assert_array_equal(G_[0], 0)

    def test_deviatoric_strain_traceless(self):
        # v = (x, 0); the out-of-plane diagonal entry is -(2/3) div v
        eps = ph.deviatoric_strain(np.array([[1.0, 0], [0, 0]]))
        np.testing.assert_allclose(eps, [4 / 3, -2 / 3, 0], rtol=1e-15)
        assert eps[0] + eps[1] - 2 / 3 == pytest.approx(0.0, abs=1e-15)

    def test_inviscid_model_raises(self):
        with pytest.raises(InviscidModel):
            ph.viscous_flux(np.array([1.0, 0, 0, 2]), np.zeros(3), np.zeros(2), GAS)


class TestSutherland:
    def test_normalisation_point(self):
        gas = ph.GasModel(mach_inf=0.5)
        assert ph.sutherland_mu(gas.t_inf, gas) == pytest.approx(1.0, rel=1e-15)

    def test_constant_law(self):
        gas = ph.GasModel(viscosity_law="constant")
        np.testing.assert_array_equal(ph.sutherland_mu(np.array([0.5, 3, 100]), gas), 1)

    def test_double_temperature(self):
        gas = ph.GasModel(mach_inf=0.5)
        Ti = 10.0
        S = 110 / (0.4 * 273 * 0.25)
        assert gas.t_inf == pytest.approx(Ti)
        expect = 2 ** 1.5 * (Ti + S) / (2 * Ti + S)
        assert ph.sutherland_mu(2 * Ti, gas) == pytest.approx(expect, rel=1e-14)

    def test_nonpositive_temperature(self):
        with pytest.raises(NonPositiveTemperature):
            ph.sutherland_mu(np.array([1.0, 0.0]), GAS)


class TestJacobians:
    def test_finite_difference(self, rng):
        U = random_states(rng, 20)
        n = random_normals(rng, 20)
        w = rng.normal(size=U.shape)
        A = ph.normal_jacobian(U, n, G)
        errs = []
        for h in (1e-3, 5e-4):
            fd = (ph.normal_flux(U + h * w, n, G) - ph.normal_flux(U - h * w, n, G)) / (2 * h)
            errs.append(np.max(np.abs(np.einsum("kij,kj->ki", A, w) - fd)))
        assert errs[1] < errs[0] / 3.5  # O(h^2)

    def test_rest_eigenvalues(self):
        U = np.array([1.0, 0, 0, 1 / (G * (G - 1))])
        lam = np.sort(np.linalg.eigvals(ph.normal_jacobian(U, np.array([1.0, 0]), G)).real)
        np.testing.assert_allclose(lam, [-1, 0, 0, 1], atol=1e-13)

    def test_homogeneity(self, rng):
        U = random_states(rng, 30)
        n = random_normals(rng, 30)
        np.testing.assert_allclose(np.einsum("kij,kj->ki", ph.normal_jacobian(U, n, G), U),
                                   ph.normal_flux(U, n, G), rtol=1e-12, atol=1e-12)


class TestEigendecomposition:
    def test_reconstruction(self, rng):
        U = random_states(rng, 100)
        n = random_normals(rng, 100)
        R, lam, L = ph.eigendecompose(U, n, GAS)
        A = ph.normal_jacobian(U, n, G)
        err = np.linalg.norm(A - np.einsum("kij,kj,kjl->kil", R, lam, L), axis=(1, 2))
        assert err.max() < 1e-12

    def test_inverse_pair(self, rng):
        U = random_states(rng, 100)
        n = random_normals(rng, 100)
        R, _, L = ph.eigendecompose(U, n, GAS)
        assert np.linalg.norm(L @ R - np.eye(4), axis=(1, 2)).max() < 1e-12

    def test_abs_jacobian_nonnegative_spectrum(self, rng):
        U = random_states(rng, 50)
        n = random_normals(rng, 50)
        lam = np.linalg.eigvals(ph.abs_jacobian(U, n, G))
        assert lam.real.min() > -1e-10

    def test_degenerate_state(self):
        with pytest.raises(DegenerateState):
            ph.eigendecompose(np.array([1.0, 2, 0, 1]), np.array([1.0, 0]), GAS)


class TestSplitJacobians:
    def test_supersonic_outflow(self):
        U = ph.conservative(1.0, np.array([3.0, 0]), 1 / G, G)
        Ap, Am = ph.split_jacobians(U, np.array([1.0, 0]), GAS)
        assert np.abs(Am).max() < 1e-12
        np.testing.assert_allclose(Ap, ph.normal_jacobian(U, np.array([1.0, 0]), G), atol=1e-12)

    def test_supersonic_inflow(self):
        U = ph.conservative(1.0, np.array([-3.0, 0]), 1 / G, G)
        Ap, _ = ph.split_jacobians(U, np.array([1.0, 0]), GAS)
        assert np.abs(Ap).max() < 1e-12

    def test_subsonic_rank(self):
        U = ph.conservative(1.0, np.array([0.5, 0.2]), 1 / G, G)
        _, Am = ph.split_jacobians(U, np.array([1.0, 0]), GAS)
        assert np.linalg.matrix_rank(Am, tol=1e-10) == 1


def test_gas_validation():
    with pytest.raises(ValueError):
        ph.GasModel(gamma=1.0)
    with pytest.raises(ValueError):
        ph.GasModel(viscosity_law="power")
    assert ph.GasModel().inviscid
    assert not ph.GasModel(reynolds=100).inviscid
