"""Built-in test cases and the drivers that solve them.

A :class:`Case` bundles the gas model, mesh family, boundary bindings,
optional exact solution and source, and a default march.  Use
:func:`solve` for one run and :func:`convergence_study` for a nested mesh
sequence.
"""

from dataclasses import dataclass, field, replace
import math
from typing import Callable, Optional

import numpy as np

from . import physics as ph
from .boundary import Dirichlet, FarField, InviscidWall, check_bindings
from .hdg import Discretization
from .mesh import square_level, unit_square, wedge_channel
from .newton import MarchConfig, newton_march
from .riemann import parse_scheme
from .shock import SensorConfig, ShockCapture
from .verification import (ConvergenceTable, couette_exact, couette_gas, couette_mixed,
                           couette_source, grouped_errors, ringleb_state)

#: nested uniform meshes of the unit square use ``base * 2^(level-1)`` cells per side
SQUARE_BASE = 4


@dataclass
class Case:
    """Everything needed to set up a run apart from mesh level, degree and scheme."""

    name: str
    gas: ph.GasModel
    mesh: Callable
    bindings: Callable
    exact: Optional[Callable] = None
    mixed: Optional[Callable] = None
    source: Optional[Callable] = None
    initial: Optional[Callable] = None
    march: MarchConfig = field(default_factory=MarchConfig)
    schemes: tuple = ("lf", "roe", "hll", "hllem")

    def initial_state(self, disc):
        if self.initial is not None:
            return disc.uniform_state(self.initial) if not callable(self.initial) \
                else disc.state_from_function(self.initial)
        if self.exact is None:
            raise ValueError(f"case {self.name!r} has no initial state")
        if self.mixed is not None and disc.viscous:
            return disc.state_from_function(self.exact, lambda x: self.mixed(x)[0],
                                            lambda x: self.mixed(x)[1])
        return disc.state_from_function(self.exact)


def _square(level):
    return square_level(level, base=SQUARE_BASE)


def ringleb_case(gamma=1.4):
    """Transonic Ringleb flow on ``[0,1]^2`` with exact far-field data on every tag."""
    gas = ph.GasModel(gamma=gamma, reynolds=math.inf)
    exact = lambda x: ringleb_state(x, gamma)
    return Case("ringleb", gas, _square,
                lambda mesh: {t: FarField(exact) for t in mesh.tag_names},
                exact=exact, march=MarchConfig(max_steps=3, steady_tol=1e-9))


def couette_case(reynolds=1.0):
    """Manufactured compressible Couette flow with Dirichlet trace data.

    The Roe and HLLEM defaults carry a small entropy fix and contact
    floor; with ``delta = 0`` or a vanishing ``theta0`` the entropy wave is
    undamped at the stagnant wall.
    """
    gas = couette_gas(reynolds)
    exact = lambda x: couette_exact(x[..., 1], gas)
    mixed = lambda x: couette_mixed(x[..., 1], gas)
    source = lambda x: couette_source(x[..., 1], reynolds)
    return Case("couette", gas, _square,
                lambda mesh: {t: Dirichlet(exact) for t in mesh.tag_names},
                exact=exact, mixed=mixed, source=source,
                march=MarchConfig(max_steps=3, steady_tol=1e-9),
                schemes=("lf", "roe:0.5", "hll", "hllem:0.1"))


def freestream_state(gas, alpha_deg=0.0):
    a = math.radians(alpha_deg)
    return ph.conservative(1.0, np.array([math.cos(a), math.sin(a)]), gas.p_inf, gas.gamma)


def freestream_case(mach=0.5, alpha_deg=30.0, reynolds=math.inf, mesh="square"):
    """Uniform flow on a built-in mesh; the steady residual must vanish."""
    gas = ph.GasModel(mach_inf=mach, reynolds=reynolds)
    U = freestream_state(gas, alpha_deg)
    builder = BUILTIN_MESHES[mesh]
    exact = lambda x: np.broadcast_to(U, x.shape[:-1] + (4,)).copy()
    return Case("freestream", gas, builder,
                lambda m: {t: FarField(U) for t in m.tag_names},
                exact=exact, march=MarchConfig(max_steps=1))


def wedge_case(mach=3.0, angle_deg=10.0):
    """Coarse supersonic compression-ramp channel, started impulsively from free stream."""
    gas = ph.GasModel(mach_inf=mach, reynolds=math.inf)
    U = freestream_state(gas)

    def bindings(mesh):
        return {"inflow": FarField(U), "outflow": FarField(U),
                "top": InviscidWall(), "wall": InviscidWall()}

    return Case("wedge", gas, lambda level: wedge_channel(6 * 2 ** level, 3 * 2 ** level,
                                                          angle_deg=angle_deg),
                bindings, initial=U,
                march=MarchConfig(dt=0.05, growth=1.2, max_steps=60, steady_drop=1e-6,
                                  steady_tol=1e-8),
                schemes=("roe", "hll", "hllem"))


#: built-in mesh families, ``level -> Mesh``
BUILTIN_MESHES = {
    "square": _square,
    "square_mirror": lambda level: unit_square(SQUARE_BASE * 2 ** (level - 1), diagonal="mirror"),
    "square_curved": lambda level: unit_square(
        SQUARE_BASE * 2 ** (level - 1), geom_degree=2,
        mapping=lambda x, y: (x + 0.05 * np.sin(np.pi * x) * np.sin(np.pi * y), y)),
    "wedge": lambda level: wedge_channel(6 * 2 ** level, 3 * 2 ** level, angle_deg=10.0),
}

CASES = {
    "ringleb": ringleb_case,
    "couette": couette_case,
    "freestream": freestream_case,
    "wedge": wedge_case,
}


def get_case(name, **params):
    try:
        factory = CASES[name]
    except KeyError:
        raise ValueError(f"unknown case {name!r}; expected one of {sorted(CASES)}") from None
    return factory(**params)


@dataclass
class RunOutput:
    disc: Discretization
    result: object
    shock: Optional[ShockCapture]


def discretize(case, mesh, k, scheme, quad_degree=None, bindings=None):
    """Discretisation of ``case`` on ``mesh``; ``bindings`` overrides the case defaults."""
    if isinstance(scheme, str):
        scheme = parse_scheme(scheme)
    bcs = bindings if bindings is not None else case.bindings(mesh)
    check_bindings(mesh.tag_names, bcs)
    return Discretization(mesh, k, case.gas, scheme, bcs, source=case.source,
                          quad_degree=quad_degree)


def solve(case, mesh, k, scheme, march=None, shock=None, bindings=None, raise_on_max=True):
    """March ``case`` to steady state; exceptions from the march propagate.

    ``shock`` is a :class:`SensorConfig`, a :class:`ShockCapture` or ``None``.
    """
    disc = discretize(case, mesh, k, scheme, bindings=bindings)
    if isinstance(shock, SensorConfig):
        shock = ShockCapture(shock) if shock.mode != "off" else None
    if shock is not None:
        shock.check(disc)
    state = case.initial_state(disc)
    result = newton_march(disc, state, march or case.march, shock=shock,
                          raise_on_max=raise_on_max)
    return RunOutput(disc, result, shock)


def convergence_study(case, k, scheme, levels, march=None):
    """Solve on each mesh level and tabulate the grouped L2 errors."""
    if case.exact is None:
        raise ValueError(f"case {case.name!r} has no exact solution")
    table = ConvergenceTable()
    for level in sorted(levels):
        mesh = case.mesh(level)
        out = solve(case, mesh, k, scheme, march=march)
        errors = grouped_errors(out.disc, out.result.state, case.exact, case.mixed)
        table.add(mesh.h, out.disc.ndof, errors)
    return table


def with_march(case, **changes):
    """Copy of ``case`` with some march settings replaced."""
    return replace(case, march=replace(case.march, **changes))
