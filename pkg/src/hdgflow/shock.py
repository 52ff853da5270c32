"""Artificial-viscosity shock capturing.

Two schemes are provided:

* ``laplacian`` (Euler runs): a modal smoothness sensor on the density feeds
  a sine ramp that sets an elemental viscosity, which multiplies an
  element-local Laplacian of every conserved variable.
* ``bulk`` (Navier-Stokes runs): a dilatation sensor sets an artificial bulk
  viscosity entering the diffusive flux.

Both elemental fields are made continuous by :func:`c0_smooth`.  The
resulting coefficients are handed to the discretisation as frozen data and
refreshed once per pseudo-time step.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .errors import ConfigError, DegenerateThresholds, ZeroField
from .hdg import ArtificialViscosity, bulk_flux_kernel
from .basis import face_points

MODES = ("off", "laplacian", "bulk")


@dataclass(frozen=True)
class SensorConfig:
    """Shock-capturing parameters.

    ``eps0`` is the bulk-viscosity scale; for the Laplacian scheme the
    maximum viscosity is ``eps0_multiplier * h / k`` per element.  The
    Laplacian ramp window is ``[-window_low log10 k, -window_high log10 k]``.
    ``s0_bulk``, ``smin`` and ``smax`` clamp the dilatation sensor
    (``smax = None`` selects ``2 / sqrt(gamma^2 - 1)``).  ``relax`` blends
    each new elemental viscosity with the previous one, which damps the
    on/off cycling of the sensor during pseudo-time marching without
    changing the steady state.
    """

    mode: str = "off"
    eps0: float = 1.5
    eps0_multiplier: float = 1.0
    window_high: float = 4.0
    window_low: float = 11.0
    s0_bulk: float = 0.01
    smin: float = 0.0
    smax: float = None
    pr_beta: float = 0.9
    relax: float = 0.2
    allow_mixed: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"shock mode must be one of {MODES}, got {self.mode!r}")
        if self.eps0 < 0 or self.eps0_multiplier < 0:
            raise ConfigError("viscosity scales must be non-negative")
        if not self.window_low > self.window_high:
            raise ConfigError("ramp window must have positive width")
        if self.smax is not None and self.smin > self.smax:
            raise ConfigError("smin must not exceed smax")
        if self.pr_beta <= 0:
            raise ConfigError("artificial Prandtl number must be positive")
        if not 0.0 < self.relax <= 1.0:
            raise ConfigError("relax must lie in (0, 1]")

    def ramp_window(self, k):
        """``(s0, xi)`` of the sine ramp for degree ``k``."""
        lk = math.log10(k)
        hi, lo = -self.window_high * lk, -self.window_low * lk
        return 0.5 * (hi + lo), 0.5 * (hi - lo)

    def s_max(self, gamma):
        return 2.0 / math.sqrt(gamma ** 2 - 1.0) if self.smax is None else self.smax


# -- sensors and ramps -----------------------------------------------------------

def persson_sensor(rho_nodal, V, P):
    """Fraction of the density energy held by the top-degree modes.

    ``rho_nodal`` is ``(n_en,)`` or batched ``(..., n_en)``; ``V`` maps
    orthonormal modal coefficients to nodal values and ``P`` selects the
    top-degree modes.
    """
    rho = np.asarray(rho_nodal, dtype=float)
    n = rho.shape[-1]
    a = np.linalg.solve(V, rho.reshape(-1, n).T).T.reshape(rho.shape)
    den = np.sum(a * a, axis=-1)
    if np.any(den == 0):
        raise ZeroField("density field is identically zero")
    num = np.einsum("...i,ij,...j->...", a, P, a)
    return num / den


def viscosity_ramp(s_e, k, eps0, config=None):
    """Sine ramp from 0 to ``eps0`` across the window in ``s_e = log10 S_e``.

    For ``k = 1`` the window collapses; a :class:`DegenerateThresholds`
    warning is issued and zero viscosity is returned.
    """
    cfg = config or SensorConfig()
    s = np.asarray(s_e, dtype=float)
    eps0 = np.asarray(eps0, dtype=float)
    if k <= 1:
        warnings.warn("ramp window collapses for k = 1; Laplacian viscosity disabled",
                      DegenerateThresholds, stacklevel=2)
        return np.zeros(np.broadcast_shapes(s.shape, eps0.shape))
    s0, xi = cfg.ramp_window(k)
    with np.errstate(invalid="ignore"):
        mid = 0.5 * eps0 * (1.0 + np.sin(np.pi * (s - s0) / (2.0 * xi)))
    out = np.where(s <= s0 - xi, 0.0, np.where(s >= s0 + xi, eps0, mid))
    return out


def dilatation_sensor(div_v, h, k, c_ref):
    """``s = -(h/k) div(v) / c_ref``; positive under compression."""
    return -(np.asarray(h) / k) * np.asarray(div_v) / c_ref


def bulk_viscosity_elemental(s_beta, h, k, gas, config=None):
    """Elemental bulk viscosity before smoothing."""
    cfg = config or SensorConfig()
    f = np.minimum(cfg.s_max(gas.gamma), np.maximum(cfg.smin, np.asarray(s_beta) - cfg.s0_bulk))
    rho_inf, v_inf = 1.0, 1.0
    scale = rho_inf * (np.asarray(h) / k) * math.sqrt(v_inf ** 2 + gas.c_inf ** 2)
    return cfg.eps0 * scale * f


def bulk_viscosity(s_beta, h, k, gas, mesh, config=None):
    """Smoothed bulk viscosity as vertex values (see :func:`c0_smooth`)."""
    return c0_smooth(bulk_viscosity_elemental(s_beta, h, k, gas, config), mesh)


def bulk_viscous_flux(U, phi, beta_star, div_v, config=None):
    """Artificial bulk-viscosity flux ``(..., 4, 2)`` for a given dilatation."""
    cfg = config or SensorConfig()
    U = np.asarray(U, dtype=float)
    div_v = np.asarray(div_v, dtype=float)
    # bulk_flux_kernel takes the dilatation through the strain-rate trace
    eps = np.zeros(div_v.shape + (3,))
    eps[..., 0] = div_v / 1.5
    return bulk_flux_kernel(U, eps, np.asarray(phi, float), np.asarray(beta_star, float), cfg.pr_beta)


# -- C0 reconstruction -------------------------------------------------------------

def c0_smooth(eps_e, mesh):
    """Vertex values of a continuous piecewise-linear field.

    Each corner vertex takes the maximum of its incident elemental values.
    Returns ``(E, 3)`` corner values per element; evaluate with
    :func:`hat_values`.
    """
    eps_e = np.asarray(eps_e, dtype=float)
    corners = mesh.elements[:, :3]
    vert = np.full(int(corners.max()) + 1, -np.inf)
    np.maximum.at(vert, corners.ravel(), np.repeat(eps_e, 3))
    return vert[corners]


def hat_values(corner_vals, pts):
    """Evaluate the linear field with per-element corner values at reference points."""
    pts = np.asarray(pts, dtype=float)
    lam = np.stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]], axis=-1)
    return np.einsum("ec,pc->ep", corner_vals, lam)


def laplacian_term(grad_U, eps_q, grad_W, wdet):
    """Element contribution ``(grad W, eps grad U)``, shape ``(E, n_en, 4)``.

    ``grad_U (E, q, 4, 2)``, ``eps_q (E, q)``, ``grad_W (E, q, n_en, 2)``
    and quadrature weights times Jacobian ``wdet (E, q)``.
    """
    return np.einsum("eq,eqaj,eqcj->eac", wdet * eps_q, grad_W, grad_U)


# -- driver used by the Newton loop ------------------------------------------------

class ShockCapture:
    """Computes frozen artificial-viscosity data from the current state."""

    def __init__(self, config):
        self.config = config
        self.reset()

    def reset(self):
        """Forget the viscosity history used for relaxation."""
        self.last_sensor = None
        self.last_elemental = None

    def check(self, disc):
        mode = self.config.mode
        if mode == "laplacian" and disc.viscous and not self.config.allow_mixed:
            raise ConfigError("Laplacian shock capturing is for Euler runs (set allow_mixed to override)")
        if mode == "bulk" and not disc.viscous:
            raise ConfigError("bulk-viscosity shock capturing needs a viscous run")

    def elemental(self, disc, state):
        """Elemental viscosity and the raw sensor values."""
        cfg = self.config
        k = disc.k
        h = disc.mesh.h_circumdiameter()
        if cfg.mode == "laplacian":
            S = persson_sensor(state.U[..., 0], disc.ref.V, disc.ref.P)
            with np.errstate(divide="ignore"):
                s = np.log10(S)
            return viscosity_ramp(s, k, cfg.eps0_multiplier * h / k, cfg), S
        if cfg.mode == "bulk":
            div = 1.5 * (state.eps[..., 0] + state.eps[..., 1])
            s_beta = dilatation_sensor(div, h[:, None], k, disc.gas.c_inf).max(axis=1)
            return bulk_viscosity_elemental(s_beta, h, k, disc.gas, cfg), s_beta
        zeros = np.zeros(disc.n_el)
        return zeros, zeros

    def viscosity(self, disc, state, commit=True):
        """Frozen viscosity data for ``state``.

        ``commit=False`` evaluates without advancing the relaxation history.
        """
        cfg = self.config
        if cfg.mode == "off":
            return None
        self.check(disc)
        eps_e, sensor = self.elemental(disc, state)
        prev = self.last_elemental
        if prev is not None and prev.shape == eps_e.shape:
            eps_e = cfg.relax * eps_e + (1.0 - cfg.relax) * prev
        if commit:
            self.last_sensor, self.last_elemental = sensor, eps_e
        corner = c0_smooth(eps_e, disc.mesh)
        ref = disc.ref
        vol = hat_values(corner, ref.qp)
        if cfg.mode == "laplacian":
            return ArtificialViscosity(lap_q=vol, pr_beta=cfg.pr_beta)
        face = np.stack([hat_values(corner, face_points(f, ref.fq_t)) for f in range(3)], axis=1)
        return ArtificialViscosity(beta_q=vol, beta_f=face, pr_beta=cfg.pr_beta)

    def nodal_field(self, disc, state):
        """Smoothed viscosity at element nodes, ``(E, n_en)``."""
        if self.config.mode == "off":
            return np.zeros((disc.n_el, disc.n_en))
        eps_e, _ = self.elemental(disc, state)
        return hat_values(c0_smooth(eps_e, disc.mesh), disc.ref.nodes)
