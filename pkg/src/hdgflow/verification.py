"""Exact solutions, error norms, convergence rates and flow diagnostics."""

from dataclasses import dataclass, field
import math

import numpy as np

from . import physics as ph
from .basis import triangle_quadrature
from .errors import AmbiguousBranch, DegenerateTable, MissingViscousData, NoRoot

# -- Ringleb flow ----------------------------------------------------------------

RINGLEB_BRACKET = (0.1, 0.999)


def _ringleb_parts(c, gamma):
    b = gamma - 1.0
    rho = c ** (2.0 / b)
    V = np.sqrt(2.0 * (1.0 - c * c) / b)
    J = 1.0 / c + 1.0 / (3.0 * c ** 3) + 1.0 / (5.0 * c ** 5) - 0.5 * np.log((1.0 + c) / (1.0 - c))
    return rho, V, J


def ringleb_residual(c, x, y, gamma=1.4):
    """Residual of the implicit relation ``(x + J/2)^2 + y^2 - 1/(4 rho^2 V^4)``."""
    rho, V, J = _ringleb_parts(c, gamma)
    return (x + 0.5 * J) ** 2 + y ** 2 - 1.0 / (4.0 * rho ** 2 * V ** 4)


def ringleb_point(c, psi_v, gamma=1.4, upper=True):
    """Forward map: position ``(x, y)`` of the point with sound speed ``c`` and ``sin(theta) = psi_v``."""
    rho, V, J = _ringleb_parts(c, gamma)
    s2 = psi_v ** 2
    x = (s2 - 0.5) / (rho * V ** 2) - 0.5 * J
    y = np.sqrt(np.maximum(0.0, 1.0 / (4 * rho ** 2 * V ** 4) - (x + 0.5 * J) ** 2))
    return x, (y if upper else -y)


def _ringleb_sound_speed(x, y, gamma, tol, seed=None, n_scan=64):
    lo, hi = RINGLEB_BRACKET
    grid = np.linspace(lo, hi, n_scan)
    vals = ringleb_residual(grid[:, None], x[None, :], y[None, :], gamma)
    changes = np.sum(np.sign(vals[1:]) != np.sign(vals[:-1]), axis=0)
    if np.any(changes == 0):
        i = int(np.flatnonzero(changes == 0)[0])
        raise NoRoot(f"no sound-speed root in {RINGLEB_BRACKET} at ({x[i]:.6g}, {y[i]:.6g})")
    a = np.full(x.shape, lo)
    b = np.full(x.shape, hi)
    multi = changes > 1
    if np.any(multi):
        if seed is None:
            i = int(np.flatnonzero(multi)[0])
            raise AmbiguousBranch(f"{changes[i]} roots in bracket at ({x[i]:.6g}, {y[i]:.6g})")
        # restrict to the scan interval whose root lies nearest the seed
        for i in np.flatnonzero(multi):
            idx = np.flatnonzero(np.sign(vals[1:, i]) != np.sign(vals[:-1, i]))
            mids = 0.5 * (grid[idx] + grid[idx + 1])
            j = idx[np.argmin(np.abs(mids - seed))]
            a[i], b[i] = grid[j], grid[j + 1]
    fa = ringleb_residual(a, x, y, gamma)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = ringleb_residual(m, x, y, gamma)
        left = np.sign(fm) == np.sign(fa)
        a = np.where(left, m, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, m)
        if np.all(b - a < 4e-16):
            break
    c = 0.5 * (a + b)
    # Newton polish with a complex-step derivative
    for _ in range(3):
        f = ringleb_residual(c, x, y, gamma)
        df = np.imag(ringleb_residual(c + 1e-30j, x, y, gamma)) / 1e-30
        step = np.where(df != 0, f / df, 0.0)
        trial = c - step
        better = np.abs(ringleb_residual(trial, x, y, gamma)) <= np.abs(f)
        c = np.where(better, trial, c)
    res = np.abs(ringleb_residual(c, x, y, gamma))
    if np.any(res > max(tol, 1e-14) * 100):
        i = int(np.argmax(res))
        raise NoRoot(f"root polish failed at ({x[i]:.6g}, {y[i]:.6g}): residual {res[i]:.3e}")
    return c


def ringleb_exact(x, y, gamma=1.4, tol=1e-14, seed=None, return_c=False):
    """Conservative Ringleb state at points ``(x, y)``.

    The velocity direction comes from ``sin(2 theta) = 2 rho V^2 |y|`` and
    ``cos(2 theta) = -2 rho V^2 (x + J/2)``; the flow crosses ``y = 0``
    vertically and is mirrored for ``y < 0``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape, y.shape)
    xf = np.broadcast_to(x, shape).ravel()
    yf = np.broadcast_to(y, shape).ravel()
    c = _ringleb_sound_speed(xf, yf, gamma, tol, seed)
    rho, V, J = _ringleb_parts(c, gamma)
    two_theta = np.arctan2(2 * rho * V ** 2 * np.abs(yf), -2 * rho * V ** 2 * (xf + 0.5 * J))
    theta = 0.5 * two_theta
    v = np.stack([-np.sign(yf) * V * np.cos(theta), V * np.sin(theta)], axis=-1)
    p = c ** (2 * gamma / (gamma - 1)) / gamma
    U = ph.conservative(rho, v, p, gamma).reshape(shape + (4,))
    if return_c:
        return U, c.reshape(shape)
    return U


def ringleb_state(xy, gamma=1.4):
    """``ringleb_exact`` taking stacked coordinates ``(..., 2)``."""
    xy = np.asarray(xy, dtype=float)
    return ringleb_exact(xy[..., 0], xy[..., 1], gamma)


# -- Couette flow ----------------------------------------------------------------

COUETTE_MACH = 0.15


def couette_gas(reynolds=1.0, prandtl=0.71, gamma=1.4):
    return ph.GasModel(gamma=gamma, mach_inf=COUETTE_MACH, reynolds=reynolds, prandtl=prandtl,
                       viscosity_law="constant")


def couette_temperature(y, gas, alpha_c=0.8, beta_c=0.85):
    g, M, Pr = gas.gamma, gas.mach_inf, gas.prandtl
    return (alpha_c + y * (beta_c - alpha_c) + 0.5 * (g - 1) * M ** 2 * Pr * y * (1 - y)) / ((g - 1) * M ** 2)


def couette_exact(y, gas, alpha_c=0.8, beta_c=0.85):
    """Conservative state of the manufactured Couette flow at heights ``y``."""
    y = np.asarray(y, dtype=float)
    g = gas.gamma
    T = couette_temperature(y, gas, alpha_c, beta_c)
    p = np.full(y.shape, 1.0 / (g * gas.mach_inf ** 2))
    rho = g * p / ((g - 1) * T)
    v = np.stack([y * np.log1p(y), np.zeros_like(y)], axis=-1)
    return ph.conservative(rho, v, p, g)


def couette_mixed(y, gas, alpha_c=0.8, beta_c=0.85):
    """Exact ``(eps, phi)`` of the Couette flow."""
    y = np.asarray(y, dtype=float)
    g, M, Pr = gas.gamma, gas.mach_inf, gas.prandtl
    eps = np.zeros(y.shape + (3,))
    eps[..., 2] = np.log1p(y) + y / (1 + y)
    phi = np.zeros(y.shape + (2,))
    phi[..., 1] = ((beta_c - alpha_c) + 0.5 * (g - 1) * M ** 2 * Pr * (1 - 2 * y)) / ((g - 1) * M ** 2)
    return eps, phi


def couette_source(y, reynolds):
    """Volume source that makes the Couette profile a steady Navier-Stokes solution."""
    y = np.asarray(y, dtype=float)
    L = np.log1p(y)
    S = np.zeros(y.shape + (4,))
    S[..., 1] = (2 + y) / (1 + y) ** 2
    S[..., 3] = L ** 2 + y * L / (1 + y) + (y * (3 + 2 * y) * L - 2 * y - 1) / (1 + y) ** 2
    return -S / reynolds


# -- error norms and rates -------------------------------------------------------

def l2_error(disc, field_nodal, exact, quad_degree=None):
    """Per-component L2 error of a nodal field against ``exact(x) -> (..., ncomp)``.

    Integrates with a rule exact to degree ``2k + 2`` by default.
    """
    k = disc.k
    qp, qw = triangle_quadrature(2 * k + 2 if quad_degree is None else quad_degree)
    N, _ = disc.ref.basis.tabulate(qp)
    x, _, det = disc.mesh.geometry(qp)
    uh = np.einsum("qa,eac->eqc", N, field_nodal)
    ue = np.asarray(exact(x), dtype=float)
    err2 = np.einsum("q,eq,eqc->c", qw, det, (uh - ue) ** 2)
    return np.sqrt(err2)


def grouped_errors(disc, state, exact_U, exact_mixed=None):
    """Errors grouped as ``rho, mom, E`` (and ``eps, phi`` for viscous runs)."""
    e = l2_error(disc, state.U, exact_U)
    out = {"rho": e[0], "mom": math.hypot(e[1], e[2]), "E": e[3]}
    if exact_mixed is not None and disc.viscous:
        ee = l2_error(disc, state.eps, lambda x: exact_mixed(x)[0])
        ep = l2_error(disc, state.phi, lambda x: exact_mixed(x)[1])
        out["eps"] = float(np.sqrt(np.sum(ee ** 2)))
        out["phi"] = float(np.sqrt(np.sum(ep ** 2)))
    return out


@dataclass
class ConvergenceTable:
    """Rows of ``(h, dofs, {variable: error})`` with ``h`` strictly decreasing."""

    rows: list = field(default_factory=list)

    def add(self, h, dofs, errors):
        if self.rows and not h < self.rows[-1]["h"]:
            raise DegenerateTable("mesh size must decrease down the table")
        self.rows.append({"h": float(h), "dofs": int(dofs), "errors": dict(errors)})

    @property
    def variables(self):
        return list(self.rows[0]["errors"]) if self.rows else []


def convergence_rate(table):
    """Observed rates per variable: ``{var: (least_squares_slope, last_interval_rate)}``."""
    rows = table.rows if isinstance(table, ConvergenceTable) else table
    if len(rows) < 2:
        raise DegenerateTable("at least two mesh levels are needed for a rate")
    h = np.array([r["h"] for r in rows])
    if np.any(np.diff(h) >= 0):
        raise DegenerateTable("mesh size must decrease down the table")
    out = {}
    for var in rows[0]["errors"]:
        e = np.array([r["errors"][var] for r in rows], dtype=float)
        lh, le = np.log(h), np.log(e)
        slope = float(np.polyfit(lh, le, 1)[0])
        last = float((le[-1] - le[-2]) / (lh[-1] - lh[-2]))
        out[var] = (slope, last)
    return out


# -- diagnostics -------------------------------------------------------------------

def entropy_error(U, gas, p_inf=None, rho_inf=1.0):
    """Pointwise ``(p/p_inf)(rho_inf/rho)^gamma - 1``."""
    U = np.asarray(U, dtype=float)
    g = gas.gamma
    p_inf = gas.p_inf if p_inf is None else p_inf
    p = ph.pressure(U, g)
    return (p / p_inf) * (rho_inf / U[..., 0]) ** g - 1.0


def entropy_error_l2(disc, state, p_inf=None, rho_inf=1.0):
    """Domain L2 norm of the entropy error of the element solution."""
    k = disc.k
    qp, qw = triangle_quadrature(2 * k + 2)
    N, _ = disc.ref.basis.tabulate(qp)
    _, _, det = disc.mesh.geometry(qp)
    Uq = np.einsum("qa,eac->eqc", N, state.U)
    s = entropy_error(Uq, disc.gas, p_inf, rho_inf)
    return float(np.sqrt(np.einsum("q,eq,eq->", qw, det, s ** 2)))


def entropy_error_surface(disc, state, tag, p_inf=None, rho_inf=1.0):
    """Surface L2 norm of the entropy error on ``tag``, divided by the surface length."""
    sk = disc.skeleton
    faces = sk.boundary_faces(tag)
    eb, fb = sk.face_elem[faces, 0], sk.face_local[faces, 0]
    Uf = np.einsum("nqa,nac->nqc", disc.Nf[fb], state.U[eb])
    s = entropy_error(Uf, disc.gas, p_inf, rho_inf)
    w = disc.wds[eb, fb]
    return float(np.sqrt(np.sum(w * s ** 2)) / np.sum(w))


def pressure_coefficient(p, gas, rho_inf=1.0, v_inf=1.0):
    return (np.asarray(p) - gas.p_inf) / (0.5 * rho_inf * v_inf ** 2)


def surface_coefficients(disc, state, tag, alpha_deg=0.0, ref_length=1.0):
    """Pressure and skin-friction distributions and force coefficients on ``tag``.

    Forces act on the body bounded by the surface, whose outward normal is
    the negative of the domain normal.  ``Cf`` needs the strain-rate field
    and raises :class:`MissingViscousData` on Euler runs.
    """
    gas = disc.gas
    sk = disc.skeleton
    faces = sk.boundary_faces(tag)
    if len(faces) == 0:
        raise KeyError(f"no boundary faces tagged {tag!r}")
    eb, fb = sk.face_elem[faces, 0], sk.face_local[faces, 0]
    Uf = np.einsum("nqa,nac->nqc", disc.Nf[fb], state.U[eb])
    n = disc.nf[eb, fb]
    w = disc.wds[eb, fb]
    p = ph.pressure(Uf, gas.gamma)
    traction = p[..., None] * n
    cf = None
    if disc.viscous:
        eps = np.einsum("nqa,nac->nqc", disc.Nf[fb], state.eps[eb])
        mu = ph.viscosity(ph.temperature(Uf, gas.gamma), gas)
        sigma = (mu / gas.reynolds)[..., None, None] * ph.voigt_to_tensor(eps)
        sn = np.einsum("...ij,...j->...i", sigma, n)
        traction = traction - sn
        t = np.stack([-n[..., 1], n[..., 0]], axis=-1)
        cf = np.sum(sn * t, axis=-1) / 0.5
    force = np.einsum("nq,nqi->i", w, traction)
    a = math.radians(alpha_deg)
    drag_dir = np.array([math.cos(a), math.sin(a)])
    lift_dir = np.array([-math.sin(a), math.cos(a)])
    q = 0.5 * ref_length
    return {
        "x": disc.xf[eb, fb],
        "Cp": pressure_coefficient(p, gas),
        "Cf": cf,
        "Cl": float(force @ lift_dir / q),
        "Cd": float(force @ drag_dir / q),
    }


def skin_friction(disc, state, tag):
    if not disc.viscous:
        raise MissingViscousData("skin friction requires a viscous run")
    return surface_coefficients(disc, state, tag)["Cf"]
