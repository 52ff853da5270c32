"""Mesh convergence of the HDG solver on the Ringleb flow.

Solves the transonic Ringleb flow on three nested meshes of the unit square
for each trace stabilisation and prints the L2 errors and observed rates.

    python3 demos/ringleb_convergence.py [k] [scheme ...]
"""

import sys

from hdgflow.cases import convergence_study, ringleb_case
from hdgflow.verification import convergence_rate


def main(argv):
    k = int(argv[0]) if argv else 2
    case = ringleb_case()
    schemes = argv[1:] or case.schemes
    for scheme in schemes:
        table = convergence_study(case, k, scheme, levels=(1, 2, 3))
        print(f"\n{scheme}, k = {k}")
        print(f"{'h':>10} {'dofs':>7} {'rho':>11} {'mom':>11} {'E':>11}")
        for row in table.rows:
            e = row["errors"]
            print(f"{row['h']:10.4f} {row['dofs']:7d} {e['rho']:11.3e} {e['mom']:11.3e} {e['E']:11.3e}")
        rates = convergence_rate(table)
        print("last-interval rates: " + " ".join(f"{v}={r[1]:.2f}" for v, r in rates.items()),
              f"(optimal {k + 1})")


if __name__ == "__main__":
    main(sys.argv[1:])
