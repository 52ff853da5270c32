"""Boundary operators applied on the trace unknown of boundary faces.

Each condition defines a pointwise residual ``B(U_e, u_hat, eps, phi, n)``
whose face integral against the trace test functions closes the global
system on that face.  The kernels are complex-safe.
"""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import physics as ph
from ._cstep import cabs
from .errors import MissingSpec

StateData = Union[np.ndarray, Callable]


def _state_at(data, x):
    """Evaluate a constant state or a callable ``f(x) -> U`` at points ``x``."""
    if callable(data):
        return np.asarray(data(x), dtype=float)
    return np.broadcast_to(np.asarray(data, dtype=float), x.shape[:-1] + (ph.NVAR,))


@dataclass(frozen=True)
class FarField:
    """Characteristic far field: ``A+(u_hat)(U_e - u_hat) + A-(u_hat)(U_inf - u_hat)``.

    ``state`` is a constant conservative vector or a callable of position.
    """

    state: StateData
    kind = "farfield"
    needs_external = True


@dataclass(frozen=True)
class PressureOutflow:
    p_out: float
    kind = "outflow"
    needs_external = False


@dataclass(frozen=True)
class AdiabaticWall:
    kind = "adiabatic"
    needs_external = False


@dataclass(frozen=True)
class IsothermalWall:
    t_wall: float
    kind = "isothermal"
    needs_external = False


@dataclass(frozen=True)
class InviscidWall:
    """Slip wall, also used as a symmetry plane."""

    kind = "inviscid"
    needs_external = False


@dataclass(frozen=True)
class Dirichlet:
    """Strong trace data ``u_hat = U_D``; used by manufactured-solution studies."""

    state: StateData
    kind = "dirichlet"
    needs_external = True


def boundary_kernel(cond, U, H, eps, phi, n, gas, ext=None):
    """Pointwise boundary residual, shape ``(..., 4)``; complex-safe."""
    g = gas.gamma
    out = np.empty(np.broadcast_shapes(U.shape, H.shape), dtype=np.result_type(U, H, eps, phi))
    kind = cond.kind
    if kind == "farfield":
        R, lam, L = ph.eigensystem(H, n, g)
        ap = np.einsum("...ij,...j,...jk->...ik", R, 0.5 * (lam + cabs(lam)), L)
        am = np.einsum("...ij,...j,...jk->...ik", R, 0.5 * (lam - cabs(lam)), L)
        out[...] = (np.einsum("...ij,...j->...i", ap, U - H)
                    + np.einsum("...ij,...j->...i", am, ext - H))
        return out
    if kind == "dirichlet":
        out[...] = ext - H
        return out
    out[..., 0] = U[..., 0] - H[..., 0]
    if kind == "outflow":
        out[..., 1:3] = U[..., 1:3] - H[..., 1:3]
        ke = 0.5 * np.sum(U[..., 1:3] ** 2, axis=-1) / U[..., 0]
        out[..., 3] = cond.p_out / (g - 1.0) + ke - H[..., 3]
    elif kind == "adiabatic":
        out[..., 1:3] = H[..., 1:3]
        mu = ph.viscosity(ph.temperature(H, g), gas)
        qn = mu / (gas.reynolds * gas.prandtl) * np.sum(phi * n, axis=-1)
        out[..., 3] = qn - gas.tau_d_energy * (U[..., 3] - H[..., 3])
    elif kind == "isothermal":
        out[..., 1:3] = H[..., 1:3]
        out[..., 3] = U[..., 0] * cond.t_wall / g - H[..., 3]
    elif kind == "inviscid":
        m = U[..., 1:3]
        mn = np.sum(m * n, axis=-1)
        out[..., 1:3] = m - mn[..., None] * n - H[..., 1:3]
        out[..., 3] = U[..., 3] - H[..., 3]
    else:
        raise ValueError(f"unknown boundary condition {kind!r}")
    return out


def boundary_residual(cond, U_e, uhat, n, gas, eps=None, phi=None, x=None):
    """Evaluate one boundary operator at given states.

    ``x`` supplies positions for conditions whose external state is a
    function of space.
    """
    U_e = np.asarray(U_e, dtype=float)
    uhat = np.asarray(uhat, dtype=float)
    n = ph._unit(n)
    eps = np.zeros(U_e.shape[:-1] + (ph.MSD,)) if eps is None else np.asarray(eps, float)
    phi = np.zeros(U_e.shape[:-1] + (ph.NSD,)) if phi is None else np.asarray(phi, float)
    ext = None
    if cond.needs_external:
        pts = np.zeros(U_e.shape[:-1] + (2,)) if x is None else np.asarray(x, float)
        ext = _state_at(cond.state, pts)
    return boundary_kernel(cond, U_e, uhat, eps, phi, n, gas, ext)


def check_bindings(mesh_tags, bindings):
    """Every mesh tag must have a condition; raises :class:`MissingSpec` naming the tag."""
    missing = [t for t in mesh_tags if t not in bindings]
    if missing:
        raise MissingSpec(f"no boundary condition bound to tag {missing[0]!r}")
