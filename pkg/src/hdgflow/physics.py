"""Gas-dynamics kernels for the 2D compressible Euler and Navier-Stokes equations.

Conserved variables are stored on the last axis as ``(rho, rho*vx, rho*vy,
rho*E)``.  All quantities are nondimensional with free-stream density,
speed and temperature scales, so that ``rho_inf = 1``, ``|v_inf| = 1``,
``c_inf = 1/Ma``, ``p_inf = 1/(gamma Ma^2)`` and ``T_inf = 1/((gamma-1) Ma^2)``.

The underscore-free kernels (``pressure``, ``inviscid_flux``,
``normal_jacobian`` ...) perform no validation and accept complex input so
they can be differentiated by complex step.  The checked entry point is
:func:`primitives`.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._cstep import cabs
from .errors import (DegenerateState, InviscidModel, NonPositiveDensity,
                     NonPositiveTemperature)

NSD = 2
NVAR = NSD + 2
MSD = NSD * (NSD + 1) // 2


@dataclass(frozen=True)
class GasModel:
    """Ideal-gas constants and nondimensional groups.

    ``reynolds = inf`` selects the inviscid (Euler) model.
    """

    gamma: float = 1.4
    mach_inf: float = 0.5
    reynolds: float = math.inf
    prandtl: float = 0.71
    sutherland_s0: float = 110.0
    t_ref: float = 273.0
    viscosity_law: str = "sutherland"

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if not self.mach_inf > 0.0:
            raise ValueError("mach_inf must be positive")
        if not self.reynolds > 0.0:
            raise ValueError("reynolds must be positive (inf for inviscid)")
        if not self.prandtl > 0.0:
            raise ValueError("prandtl must be positive")
        if self.viscosity_law not in ("sutherland", "constant"):
            raise ValueError(f"unknown viscosity law {self.viscosity_law!r}")

    @property
    def inviscid(self):
        return math.isinf(self.reynolds)

    @property
    def t_inf(self):
        return 1.0 / ((self.gamma - 1.0) * self.mach_inf**2)

    @property
    def p_inf(self):
        return 1.0 / (self.gamma * self.mach_inf**2)

    @property
    def c_inf(self):
        return 1.0 / self.mach_inf

    @property
    def sutherland_s(self):
        return self.sutherland_s0 / ((self.gamma - 1.0) * self.t_ref * self.mach_inf**2)

    @property
    def tau_d(self):
        """Diagonal of the diffusive stabilisation matrix (zeros when inviscid)."""
        if self.inviscid:
            return np.zeros(NVAR)
        k = 1.0 / ((self.gamma - 1.0) * self.mach_inf**2 * self.prandtl)
        return np.array([0.0, 1.0, 1.0, k]) / self.reynolds

    @property
    def tau_d_energy(self):
        """Heat-flux stabilisation used by the adiabatic-wall operator."""
        return 1.0 / ((self.gamma - 1.0) * self.mach_inf**2 * self.reynolds * self.prandtl)


@dataclass(frozen=True)
class Primitives:
    rho: np.ndarray
    v: np.ndarray
    p: np.ndarray
    T: np.ndarray
    E: np.ndarray
    c: np.ndarray
    pressure_ok: np.ndarray

    @property
    def admissible(self):
        return bool(np.all(self.pressure_ok))


# -- unchecked, complex-safe kernels -----------------------------------------

def velocity(U):
    return U[..., 1:NSD + 1] / U[..., :1]


def pressure(U, gamma):
    rho = U[..., 0]
    m = U[..., 1:NSD + 1]
    return (gamma - 1.0) * (U[..., NSD + 1] - 0.5 * np.sum(m * m, axis=-1) / rho)


def temperature(U, gamma):
    return gamma * pressure(U, gamma) / ((gamma - 1.0) * U[..., 0])


def sound_speed(U, gamma):
    return np.sqrt(gamma * pressure(U, gamma) / U[..., 0])


def enthalpy(U, gamma):
    return (U[..., NSD + 1] + pressure(U, gamma)) / U[..., 0]


def conservative(rho, v, p, gamma):
    """Assemble conserved variables from density, velocity and pressure."""
    rho = np.asarray(rho)
    v = np.asarray(v)
    U = np.empty(np.broadcast_shapes(rho.shape, v.shape[:-1], np.shape(p)) + (NVAR,),
                 dtype=np.result_type(rho, v, p, float))
    U[..., 0] = rho
    U[..., 1:NSD + 1] = rho[..., None] * v
    U[..., NSD + 1] = p / (gamma - 1.0) + 0.5 * rho * np.sum(v * v, axis=-1)
    return U


def inviscid_flux(U, gamma):
    """Convective flux tensor, shape ``(..., NVAR, NSD)``."""
    rho = U[..., 0]
    v = velocity(U)
    p = pressure(U, gamma)
    F = np.empty(U.shape + (NSD,), dtype=U.dtype)
    F[..., 0, :] = U[..., 1:NSD + 1]
    F[..., 1:NSD + 1, :] = rho[..., None, None] * v[..., :, None] * v[..., None, :]
    for i in range(NSD):
        F[..., 1 + i, i] += p
    F[..., NSD + 1, :] = (U[..., NSD + 1] + p)[..., None] * v
    return F


def normal_flux(U, n, gamma):
    return np.einsum("...ij,...j->...i", inviscid_flux(U, gamma), n)


def viscosity(T, gas):
    if gas.viscosity_law == "constant":
        return np.ones_like(T)
    t_inf = gas.t_inf
    s = gas.sutherland_s
    return (T / t_inf) ** 1.5 * (t_inf + s) / (T + s)


def voigt_to_tensor(eps):
    t = np.empty(eps.shape[:-1] + (NSD, NSD), dtype=eps.dtype)
    t[..., 0, 0] = eps[..., 0]
    t[..., 1, 1] = eps[..., 1]
    t[..., 0, 1] = eps[..., 2]
    t[..., 1, 0] = eps[..., 2]
    return t


def deviatoric_strain(grad_v):
    """Voigt form of ``2 sym(grad v) - (2/3) div(v) I`` from ``grad_v[i, j] = dv_i/dx_j``."""
    div = grad_v[..., 0, 0] + grad_v[..., 1, 1]
    out = np.empty(grad_v.shape[:-2] + (MSD,), dtype=grad_v.dtype)
    out[..., 0] = 2.0 * grad_v[..., 0, 0] - 2.0 / 3.0 * div
    out[..., 1] = 2.0 * grad_v[..., 1, 1] - 2.0 / 3.0 * div
    out[..., 2] = grad_v[..., 0, 1] + grad_v[..., 1, 0]
    return out


def viscous_flux_kernel(U, eps, phi, gas):
    """Diffusive flux tensor without model checks, shape ``(..., NVAR, NSD)``."""
    mu = viscosity(temperature(U, gas.gamma), gas)
    sigma = (mu / gas.reynolds)[..., None, None] * voigt_to_tensor(eps)
    q = (mu / (gas.reynolds * gas.prandtl))[..., None] * phi
    v = velocity(U)
    G = np.zeros(U.shape + (NSD,), dtype=np.result_type(U, eps, phi))
    G[..., 1:NSD + 1, :] = sigma
    G[..., NSD + 1, :] = np.einsum("...ij,...i->...j", sigma, v) + q
    return G


def normal_jacobian(U, n, gamma):
    """``dF(U)/dU . n`` in closed form, shape ``(..., NVAR, NVAR)``."""
    beta = gamma - 1.0
    u = velocity(U)
    un = np.sum(u * n, axis=-1)
    q2 = np.sum(u * u, axis=-1)
    H = enthalpy(U, gamma)
    A = np.zeros(np.broadcast_shapes(U.shape[:-1], n.shape[:-1]) + (NVAR, NVAR),
                 dtype=np.result_type(U, n))
    A[..., 0, 1:NSD + 1] = n
    for i in range(NSD):
        A[..., 1 + i, 0] = -u[..., i] * un + n[..., i] * beta * q2 / 2
        for j in range(NSD):
            A[..., 1 + i, 1 + j] = u[..., i] * n[..., j] - beta * u[..., j] * n[..., i]
        A[..., 1 + i, 1 + i] += un
        A[..., 1 + i, NSD + 1] = beta * n[..., i]
    A[..., NSD + 1, 0] = un * (beta * q2 / 2 - H)
    for j in range(NSD):
        A[..., NSD + 1, 1 + j] = H * n[..., j] - beta * u[..., j] * un
    A[..., NSD + 1, NSD + 1] = gamma * un
    return A


def eigensystem(U, n, gamma):
    """Closed-form eigenstructure of the normal Jacobian.

    Right eigenvectors are scaled to unit density component (acoustic and
    entropy waves) and unit tangential momentum (shear wave); the left
    eigenvectors are the matching rows of the inverse.  Eigenvalues are
    ordered ``(v.n - c, v.n, v.n, v.n + c)``.
    """
    beta = gamma - 1.0
    u = velocity(U)
    c = sound_speed(U, gamma)
    H = enthalpy(U, gamma)
    shape = np.broadcast_shapes(U.shape[:-1], n.shape[:-1])
    n = np.broadcast_to(n, shape + (NSD,))
    t = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    un = np.sum(u * n, axis=-1)
    ut = np.sum(u * t, axis=-1)
    q2 = np.sum(u * u, axis=-1)
    dtype = np.result_type(U, n)
    R = np.zeros(shape + (NVAR, NVAR), dtype=dtype)
    R[..., 0, 0] = 1.0
    R[..., 1:3, 0] = u - c[..., None] * n
    R[..., 3, 0] = H - c * un
    R[..., 0, 1] = 1.0
    R[..., 1:3, 1] = u
    R[..., 3, 1] = 0.5 * q2
    R[..., 1:3, 2] = t
    R[..., 3, 2] = ut
    R[..., 0, 3] = 1.0
    R[..., 1:3, 3] = u + c[..., None] * n
    R[..., 3, 3] = H + c * un

    c2 = c * c
    L = np.zeros_like(R)
    L[..., 0, 0] = (0.5 * beta * q2 + c * un) / (2 * c2)
    L[..., 0, 1:3] = (-beta * u - c[..., None] * n) / (2 * c2[..., None])
    L[..., 0, 3] = beta / (2 * c2)
    L[..., 1, 0] = 1.0 - 0.5 * beta * q2 / c2
    L[..., 1, 1:3] = beta * u / c2[..., None]
    L[..., 1, 3] = -beta / c2
    L[..., 2, 0] = -ut
    L[..., 2, 1:3] = t
    L[..., 3, 0] = (0.5 * beta * q2 - c * un) / (2 * c2)
    L[..., 3, 1:3] = (-beta * u + c[..., None] * n) / (2 * c2[..., None])
    L[..., 3, 3] = beta / (2 * c2)

    lam = np.stack([un - c, un, un, un + c], axis=-1)
    return R, lam, L


def spectral_function(U, n, gamma, f):
    """``R diag(f(lambda)) L`` for an elementwise function ``f``."""
    R, lam, L = eigensystem(U, n, gamma)
    return np.einsum("...ij,...j,...jk->...ik", R, f(lam), L)


def abs_jacobian(U, n, gamma):
    return spectral_function(U, n, gamma, cabs)


# -- checked public operations ------------------------------------------------

def _unit(n):
    n = np.asarray(n, dtype=float)
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    if not np.all(norm > 0):
        raise ValueError("zero normal vector")
    return n / norm


def primitives(U, gas):
    """Primitive variables of a (batch of) conservative state(s).

    Raises :class:`NonPositiveDensity` if any density is not positive.  A
    non-positive pressure is reported through ``pressure_ok`` and leaves
    ``c`` as NaN at the offending entries.
    """
    U = np.asarray(U, dtype=float)
    rho = U[..., 0]
    if np.any(rho <= 0):
        raise NonPositiveDensity(f"min rho = {np.min(rho):.6e}")
    g = gas.gamma
    v = velocity(U)
    p = pressure(U, g)
    ok = p > 0
    with np.errstate(invalid="ignore"):
        c = np.where(ok, np.sqrt(np.where(ok, g * p / rho, 1.0)), np.nan)
    return Primitives(rho=rho, v=v, p=p, T=g * p / ((g - 1) * rho), E=U[..., 3] / rho,
                      c=c, pressure_ok=ok)


def is_admissible(U, gamma):
    U = np.asarray(U, dtype=float)
    return bool(np.all(U[..., 0] > 0) and np.all(pressure(U, gamma) > 0))


def sutherland_mu(T, gas):
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise NonPositiveTemperature(f"min T = {np.min(T):.6e}")
    return viscosity(T, gas)


def viscous_flux(U, eps_d, phi, gas):
    """Diffusive flux tensor ``G`` with rows ``(0; sigma; (sigma v + q)^T)``."""
    if gas.inviscid:
        raise InviscidModel("viscous flux requested for an inviscid gas model")
    return viscous_flux_kernel(np.asarray(U, float), np.asarray(eps_d, float),
                               np.asarray(phi, float), gas)


def _check_sound_speed(U, gas):
    pr = primitives(U, gas)
    if not pr.admissible:
        raise DegenerateState("sound speed undefined for non-positive pressure")
    return pr


def eigendecompose(U, n, gas):
    """Return ``(R, Lambda, L)`` with ``A_n = R diag(Lambda) L``."""
    _check_sound_speed(U, gas)
    return eigensystem(np.asarray(U, float), _unit(n), gas.gamma)


def split_jacobians(U, n, gas):
    """Return ``(A_n^+, A_n^-) = ((A_n + |A_n|)/2, (A_n - |A_n|)/2)``."""
    _check_sound_speed(U, gas)
    U = np.asarray(U, float)
    n = _unit(n)
    A = normal_jacobian(U, n, gas.gamma)
    absA = abs_jacobian(U, n, gas.gamma)
    return 0.5 * (A + absA), 0.5 * (A - absA)
