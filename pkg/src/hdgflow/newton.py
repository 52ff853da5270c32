"""Newton-Raphson with backward-Euler pseudo-time continuation."""

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .condense import condense, recover_local, assemble_and_solve
from .errors import HDGError, MaxIterations, NonPhysicalState, SingularGlobalMatrix, SingularLocalMatrix

log = logging.getLogger(__name__)


@dataclass
class MarchConfig:
    """Pseudo-time and Newton controls.

    ``dt = inf`` performs a plain steady Newton solve.  Newton stops when the
    residual meets ``newton_rtol``/``newton_atol`` or the increment falls
    below ``newton_stol`` relative to the state (round-off floor).  A Newton
    step that would make density or pressure non-positive is halved up to
    ``damping_halvings`` times before the state is declared non-physical.  ``on_nonphysical`` is
    ``'abort'`` (raise) or ``'halve'`` (retry the step with half the step).
    """

    dt: float = math.inf
    growth: float = 1.0
    dt_max: float = math.inf
    max_steps: int = 50
    newton_rtol: float = 1e-8
    newton_atol: float = 1e-12
    max_newton: int = 25
    newton_stol: float = 1e-12
    damping_halvings: int = 6
    steady_tol: float = 1e-6
    steady_drop: float = 1e-3
    on_nonphysical: str = "abort"
    min_dt: float = 1e-10
    max_halvings: int = 20

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.on_nonphysical not in ("abort", "halve"):
            raise ValueError("on_nonphysical must be 'abort' or 'halve'")


@dataclass
class MarchResult:
    state: object
    converged: bool
    history: list = field(default_factory=list)
    newton_history: list = field(default_factory=list)
    min_rho: float = math.inf
    min_p: float = math.inf


def newton_increment(disc, sysm):
    """Solve the linearised system for ``(dZ, dH)``."""
    K, F, X, y = condense(sysm.A_ZZ, sysm.A_ZH, sysm.A_HZ, sysm.A_HH, -sysm.R_Z, -sysm.R_H)
    dH, _ = assemble_and_solve(K, F, disc.gdof, disc.ndof)
    dZ = recover_local(X, y, dH[disc.gdof])
    return dZ, dH


def apply_increment(disc, state, dZ, dH, alpha=1.0):
    dU, deps, dphi = disc.unpack(dZ)
    new = state.copy()
    new.U += alpha * dU
    new.H += alpha * dH.reshape(new.H.shape)
    if disc.viscous:
        new.eps += alpha * deps
        new.phi += alpha * dphi
    return new


def newton_update(disc, state, sysm, damping_halvings=0, step=0):
    """Updated state and the relative size of the applied increment.

    The increment is halved while the result has non-positive density or
    pressure; :class:`NonPhysicalState` reports the undamped minima when no
    admissible fraction is found.
    """
    dZ, dH = newton_increment(disc, sysm)
    if not (np.all(np.isfinite(dZ)) and np.all(np.isfinite(dH))):
        raise FloatingPointError("non-finite Newton increment")
    alpha = 1.0
    first = None
    for _ in range(damping_halvings + 1):
        new = apply_increment(disc, state, dZ, dH, alpha)
        min_rho, min_p = disc.admissibility(new)
        if min_rho > 0 and min_p > 0:
            break
        if first is None:
            first = (min_rho, min_p)
        alpha *= 0.5
    else:
        raise NonPhysicalState(step, *first)
    scale = max(float(np.max(np.abs(disc.pack(state)))), float(np.max(np.abs(state.H))), 1e-300)
    size = alpha * max(float(np.max(np.abs(dZ))), float(np.max(np.abs(dH))))
    return new, size / scale


def _check(disc, state, step):
    min_rho, min_p = disc.admissibility(state)
    if not (min_rho > 0 and min_p > 0) or not np.isfinite(min_rho + min_p):
        raise NonPhysicalState(step, min_rho, min_p)
    return min_rho, min_p


def newton_solve(disc, state, dt, U_prev, cfg, shock=None, step=0, newton_log=None):
    """Newton iterations for one implicit step; returns the new state."""
    norm0 = None
    # frozen over the step so Newton sees a fixed operator
    av = shock.viscosity(disc, state) if shock is not None else None
    for it in range(cfg.max_newton + 1):
        sysm = disc.evaluate(state, dt, U_prev, av=av, jacobian=True)
        norm = math.sqrt(float(np.sum(sysm.R_Z ** 2)) + float(np.sum(disc.global_residual(sysm) ** 2)))
        if not np.isfinite(norm):
            min_rho, min_p = disc.admissibility(state)
            raise NonPhysicalState(step, min_rho, min_p)
        if norm0 is None:
            norm0 = norm
        if newton_log is not None:
            newton_log.append((step, it, norm))
        if norm <= cfg.newton_atol or norm <= cfg.newton_rtol * norm0:
            return state, it
        if it == cfg.max_newton:
            break
        try:
            state, rel_step = newton_update(disc, state, sysm, cfg.damping_halvings, step)
        except (SingularLocalMatrix, SingularGlobalMatrix, FloatingPointError):
            min_rho, min_p = disc.admissibility(state)
            raise NonPhysicalState(step, min_rho, min_p) from None
        _check(disc, state, step)
        if rel_step <= cfg.newton_stol:
            return state, it + 1
    return state, cfg.max_newton


def steady_residual(disc, state, shock=None):
    av = shock.viscosity(disc, state, commit=False) if shock is not None else None
    sysm = disc.evaluate(state, math.inf, None, av=av, jacobian=False)
    return disc.steady_norms(sysm)


def newton_march(disc, state, cfg=None, shock=None, raise_on_max=True):
    """March to steady state.

    The run is declared converged when the continuity steady residual falls
    below ``steady_tol`` or drops by ``steady_drop`` relative to its
    maximum.  Raises :class:`NonPhysicalState` when admissibility fails
    under the ``abort`` policy and :class:`MaxIterations` when ``max_steps``
    is exhausted (unless ``raise_on_max`` is false); either exception carries
    the partial :class:`MarchResult` as ``result``.
    """
    cfg = cfg or MarchConfig()
    state = state.copy()
    min_rho, min_p = disc.admissibility(state)
    res_c, res_t = steady_residual(disc, state, shock)
    history = [dict(step=0, time=0.0, res_continuity=res_c, res_total=res_t,
                    min_rho=min_rho, min_p=min_p)]
    result = MarchResult(state, False, history, [], min_rho, min_p)
    res_max = res_c
    dt = cfg.dt
    t = 0.0
    step = 0
    halvings = 0
    while step < cfg.max_steps:
        step += 1
        try:
            new, _ = newton_solve(disc, state, dt, state.U.copy(), cfg, shock, step,
                                  result.newton_history)
        except NonPhysicalState as exc:
            result.min_rho = min(result.min_rho, exc.min_rho)
            result.min_p = min(result.min_p, exc.min_p)
            history.append(dict(step=step, time=t, res_continuity=math.nan, res_total=math.nan,
                                min_rho=exc.min_rho, min_p=exc.min_p))
            if cfg.on_nonphysical == "halve" and math.isfinite(dt) and halvings < cfg.max_halvings \
                    and dt / 2 >= cfg.min_dt:
                dt /= 2
                halvings += 1
                step -= 1
                log.info("step %d rejected (min p %.3e); dt -> %.3e", exc.step, exc.min_p, dt)
                continue
            result.state = state
            exc.result = result
            raise
        state = new
        t += dt
        min_rho, min_p = disc.admissibility(state)
        result.min_rho = min(result.min_rho, min_rho)
        result.min_p = min(result.min_p, min_p)
        res_c, res_t = steady_residual(disc, state, shock)
        history.append(dict(step=step, time=t, res_continuity=res_c, res_total=res_t,
                            min_rho=min_rho, min_p=min_p))
        log.info("step %d dt %.3e res_cont %.3e res_total %.3e min_p %.3e",
                 step, dt, res_c, res_t, min_p)
        res_max = max(res_max, res_c)
        result.state = state
        if res_c < cfg.steady_tol or res_c <= cfg.steady_drop * res_max:
            result.converged = True
            return result
        if math.isfinite(dt):
            dt = min(dt * cfg.growth, cfg.dt_max)
    if raise_on_max:
        exc = MaxIterations(f"no steady convergence after {cfg.max_steps} steps")
        exc.result = result
        raise exc
    return result


__all__ = ["MarchConfig", "MarchResult", "newton_march", "newton_solve", "newton_update",
           "steady_residual", "HDGError"]
