"""Modal smoothness sensor and the artificial viscosity it switches on.

A density jump across x = 0.4 is interpolated on a k = 3 mesh.  Elements cut
by the jump carry energy in their top modes and receive viscosity; smooth
elements read a sensor value near round-off and receive none.

    python3 demos/shock_sensor.py
"""

import numpy as np

from hdgflow import physics as ph
from hdgflow.boundary import InviscidWall
from hdgflow.hdg import Discretization
from hdgflow.mesh import unit_square
from hdgflow.riemann import parse_scheme
from hdgflow.shock import SensorConfig, ShockCapture

gas = ph.GasModel(mach_inf=2.0)
mesh = unit_square(8)
disc = Discretization(mesh, 3, gas, parse_scheme("hll"), {t: InviscidWall() for t in mesh.tag_names})


def step(x):
    rho = np.where(x[..., 0] < 0.4, 1.0, 2.5) + 0.1 * np.sin(np.pi * x[..., 1])
    return ph.conservative(rho, np.zeros(x.shape), 1.0, gas.gamma)


state = disc.state_from_function(step)
capture = ShockCapture(SensorConfig(mode="laplacian", relax=1.0))
eps, S = capture.elemental(disc, state)
centres = mesh.corner_coords.mean(axis=1)
order = np.argsort(centres[:, 0])
print(f"{'x_c':>6} {'log10 S':>9} {'eps':>10}")
for e in order[::4]:
    print(f"{centres[e, 0]:6.3f} {np.log10(max(S[e], 1e-300)):9.2f} {eps[e]:10.3e}")
print(f"\n{np.count_nonzero(eps)} of {mesh.n_elements} elements carry artificial viscosity")
