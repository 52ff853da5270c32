"""Stabilisation matrices and trace fluxes for the HDG Riemann-solver family.

The HDG trace flux on an element face is

    F_hat . n = F(u_hat) n + tau(u_hat) (u_e - u_hat)

and the choice of ``tau`` selects the Riemann solver:

* ``lf``    : ``(|v.n| + c) I``
* ``roe``   : ``R max(|Lambda|, delta) L``
* ``hll``   : ``s+ I`` with ``s+ = max(0, v.n + c)``
* ``hlle``  : as ``hll`` with ``s+`` also maximised over the element state
* ``hllem`` : ``s+ R diag(1, theta, theta, 1) L`` with
  ``theta = max(|v.n| / (|v.n| + c), theta0)``

``tau`` is always evaluated at the trace state.  The two-state DG fluxes in
:func:`dg_reference_flux` are kept as independent oracles for testing.
"""

from dataclasses import dataclass

import numpy as np

from . import physics as ph
from ._cstep import cabs, cmax, cmin
from .errors import DegenerateState

KINDS = ("lf", "roe", "hll", "hlle", "hllem")


@dataclass(frozen=True)
class RiemannScheme:
    kind: str = "hll"
    delta: float = 0.0
    theta0: float = 1e-8
    force_theta: float = None  # testing hook: replaces theta-hat everywhere

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Riemann scheme {self.kind!r}; expected one of {KINDS}")
        if self.delta < 0:
            raise ValueError("entropy-fix threshold delta must be non-negative")
        if not 0.0 < self.theta0 < 1.0:
            raise ValueError("theta0 must lie in (0, 1)")

    def __str__(self):
        if self.kind == "roe" and self.delta:
            return f"roe:{self.delta:g}"
        if self.kind == "hllem" and self.theta0 != 1e-8:
            return f"hllem:{self.theta0:g}"
        return self.kind


def parse_scheme(text):
    """Parse ``lf | roe[:delta] | hll | hlle | hllem[:theta0]``."""
    name, _, arg = text.strip().lower().partition(":")
    aliases = {"laxfriedrichs": "lf", "lax-friedrichs": "lf", "llf": "lf"}
    name = aliases.get(name, name)
    if name not in KINDS:
        raise ValueError(f"unknown Riemann scheme {text!r}; expected one of {KINDS}")
    if arg:
        value = float(arg)
        if name == "roe":
            return RiemannScheme("roe", delta=value)
        if name == "hllem":
            return RiemannScheme("hllem", theta0=value)
        raise ValueError(f"scheme {name!r} takes no parameter")
    return RiemannScheme(name)


def entropy_fix_eigs(lam, delta):
    """Eigenvalue magnitudes floored at ``delta``: ``max(|lambda_i|, delta)``."""
    return cmax(cabs(lam), np.asarray(delta, dtype=float))


def _normal_speed(U, n, gamma):
    return np.sum(ph.velocity(U) * n, axis=-1), ph.sound_speed(U, gamma)


def _s_plus(uhat, n, gamma, u_e=None):
    un, c = _normal_speed(uhat, n, gamma)
    s = cmax(un + c, 0.0)
    if u_e is not None:
        un_e, c_e = _normal_speed(u_e, n, gamma)
        s = cmax(s, un_e + c_e)
    return s


def hllem_theta(uhat, n, gamma, scheme):
    if scheme.force_theta is not None:
        un, _ = _normal_speed(uhat, n, gamma)
        return np.full(np.shape(un), scheme.force_theta) + 0 * un
    un, c = _normal_speed(uhat, n, gamma)
    aun = cabs(un)
    return cmax(aun / (aun + c), scheme.theta0)


def tau_kernel(scheme, uhat, n, gamma, u_e=None):
    """Unchecked, complex-safe stabilisation matrix, shape ``(..., 4, 4)``.

    ``u_e`` is only used by ``hlle``, which widens ``s+`` with the element
    state on the same side of the face.
    """
    kind = scheme.kind
    eye = np.eye(ph.NVAR)
    if kind == "lf":
        un, c = _normal_speed(uhat, n, gamma)
        return (cabs(un) + c)[..., None, None] * eye
    if kind == "roe":
        return ph.spectral_function(uhat, n, gamma, lambda lam: entropy_fix_eigs(lam, scheme.delta))
    if kind == "hll":
        return _s_plus(uhat, n, gamma)[..., None, None] * eye
    if kind == "hlle":
        return _s_plus(uhat, n, gamma, u_e)[..., None, None] * eye
    # hllem
    s = _s_plus(uhat, n, gamma)
    theta = hllem_theta(uhat, n, gamma, scheme)
    one = np.ones_like(theta)
    diag = np.stack([one, theta, theta, one], axis=-1)
    R, _, L = ph.eigensystem(uhat, n, gamma)
    return s[..., None, None] * np.einsum("...ij,...j,...jk->...ik", R, diag, L)


def trace_flux_kernel(scheme, uhat, u_e, n, gamma):
    tau = tau_kernel(scheme, uhat, n, gamma, u_e)
    return ph.normal_flux(uhat, n, gamma) + np.einsum("...ij,...j->...i", tau, u_e - uhat)


def _checked(U, gas):
    U = np.asarray(U, dtype=float)
    if not ph.primitives(U, gas).admissible:
        raise DegenerateState("state with non-positive pressure")
    return U


def stabilization_tau(scheme, uhat, n, gas, u_e=None, return_flag=False):
    """Stabilisation matrix ``tau(u_hat)`` for ``scheme``.

    With ``return_flag`` the second return value marks entries where
    ``s+ = 0`` for the HLL family, i.e. faces with supersonic inflow whose
    trace flux is fully upwinded from the trace state.
    """
    uhat = _checked(uhat, gas)
    n = ph._unit(n)
    if u_e is not None:
        u_e = _checked(u_e, gas)
    tau = tau_kernel(scheme, uhat, n, gas.gamma, u_e)
    if not return_flag:
        return tau
    if scheme.kind in ("hll", "hlle", "hllem"):
        flag = _s_plus(uhat, n, gas.gamma, u_e if scheme.kind == "hlle" else None) == 0
    else:
        flag = np.zeros(uhat.shape[:-1], dtype=bool)
    return tau, flag


def trace_flux(uhat, u_e, n, scheme, gas):
    """One-sided HDG trace flux ``F(u_hat) n + tau(u_hat) (u_e - u_hat)``."""
    uhat = _checked(uhat, gas)
    u_e = _checked(u_e, gas)
    return trace_flux_kernel(scheme, uhat, u_e, ph._unit(n), gas.gamma)


def wave_speeds(uhat, n, gas, variant="hll", u_plus=None, u_minus=None):
    """Signal speeds ``(s+, s-)`` with ``s+ >= 0 >= s-``.

    The ``hlle`` variant takes the extreme speeds over ``u_hat`` and the
    optional neighbouring states ``u_plus`` and ``u_minus``.
    """
    uhat = _checked(uhat, gas)
    n = ph._unit(n)
    g = gas.gamma
    un, c = _normal_speed(uhat, n, g)
    s_plus = np.maximum(0.0, un + c)
    s_minus = np.minimum(0.0, un - c)
    if variant == "hlle":
        for other in (u_plus, u_minus):
            if other is None:
                continue
            un_o, c_o = _normal_speed(_checked(other, gas), n, g)
            s_plus = np.maximum(s_plus, un_o + c_o)
            s_minus = np.minimum(s_minus, un_o - c_o)
    elif variant != "hll":
        raise ValueError(f"unknown wave-speed variant {variant!r}")
    return s_plus, s_minus


def dg_reference_flux(u_plus, u_minus, n, scheme, gas):
    """Classical two-state flux seen from the ``+`` side (``n`` points from + to -).

    Used as a test oracle only.  The intermediate state is the arithmetic
    mean; HLL-type fluxes follow the standard form
    ``(s+ F+ - s- F- + s+ s- theta (u- - u+)) / (s+ - s-)``.
    """
    up = _checked(u_plus, gas)
    um = _checked(u_minus, gas)
    n = ph._unit(n)
    g = gas.gamma
    ustar = 0.5 * (up + um)
    fp = ph.normal_flux(up, n, g)
    fm = ph.normal_flux(um, n, g)
    jump = up - um
    if scheme.kind in ("lf", "roe"):
        tau = tau_kernel(scheme, ustar, n, g)
        return 0.5 * (fp + fm) + 0.5 * np.einsum("...ij,...j->...i", tau, jump)
    variant = "hlle" if scheme.kind == "hlle" else "hll"
    sp, sm = wave_speeds(ustar, n, gas, variant, up, um)
    if scheme.kind == "hllem":
        theta = tau_kernel(scheme, ustar, n, g) / np.where(sp > 0, sp, 1.0)[..., None, None]
        diss = np.einsum("...ij,...j->...i", theta, -jump)
    else:
        diss = -jump
    den = (sp - sm)[..., None]
    return (sp[..., None] * fp - sm[..., None] * fm + (sp * sm)[..., None] * diss) / den
