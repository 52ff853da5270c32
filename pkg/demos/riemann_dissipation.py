"""Compare the dissipation of the four trace stabilisations.

For a state moving along a face (zero normal velocity) the Lax-Friedrichs
and HLL matrices damp every wave at the acoustic rate, while Roe and HLLEM
leave the contact and shear waves almost undamped.

    python3 demos/riemann_dissipation.py
"""

import numpy as np

from hdgflow import physics as ph
from hdgflow.riemann import parse_scheme, stabilization_tau

gas = ph.GasModel()
n = np.array([1.0, 0.0])
for un in (0.0, 0.3, 0.9):
    U = ph.conservative(1.0, np.array([un, 0.4]), 1 / gas.gamma, gas.gamma)
    R, lam, L = ph.eigendecompose(U, n, gas)
    print(f"\nnormal velocity {un}, eigenvalues {np.round(lam, 3)}")
    for name in ("lf", "roe", "roe:0.2", "hll", "hllem", "hllem:0.1"):
        tau = stabilization_tau(parse_scheme(name), U, n, gas)
        # characteristic damping rates: diagonal of L tau R
        rates = np.diag(L @ tau @ R)
        print(f"  {name:10s} " + " ".join(f"{r:7.4f}" for r in rates))
