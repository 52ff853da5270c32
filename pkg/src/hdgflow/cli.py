"""Command-line driver.

Commands::

    hdgflow solve <config>                 steady solve, writes field and history files
    hdgflow converge <config>              h-convergence study, writes a rate table
    hdgflow flux-table <scheme> <state...> trace flux and stabilisation for one state

Exit codes: 0 success, 1 configuration or usage error, 2 non-physical state,
3 iteration budget exhausted, 4 convergence rate below threshold.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import logging
import math
from pathlib import Path
import sys

import numpy as np

from . import physics as ph
from .config import load_config
from .errors import DegenerateTable, HDGError, MaxIterations, NonPhysicalState
from .riemann import parse_scheme, stabilization_tau, trace_flux
from .shock import ShockCapture
from .verification import ConvergenceTable, convergence_rate, grouped_errors
from .cases import discretize
from .newton import newton_march

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONPHYSICAL = 2
EXIT_MAXITER = 3
EXIT_RATE = 4

HISTORY_FIELDS = ("step", "time", "res_continuity", "res_total", "min_rho", "min_p")

log = logging.getLogger("hdgflow")


def _fmt(x):
    return repr(float(x))


# -- output writers ----------------------------------------------------------------

def write_field(path, disc, state, eps_art=None):
    """One row per element node: ``x y rho rhovx rhovy rhoE [eps11 eps22 eps12 phix phiy] [eps_art]``."""
    cols = ["x", "y", "rho", "rhovx", "rhovy", "rhoE"]
    blocks = [disc.node_coords, state.U]
    if disc.viscous:
        cols += ["eps11", "eps22", "eps12", "phix", "phiy"]
        blocks += [state.eps, state.phi]
    if eps_art is not None:
        cols.append("eps_art")
        blocks.append(eps_art[..., None])
    data = np.concatenate(blocks, axis=-1).reshape(-1, len(cols))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(cols) + "\n")
        for row in data:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def write_history(path, history):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_FIELDS)
        for row in history:
            w.writerow([row["step"]] + [_fmt(row[k]) for k in HISTORY_FIELDS[1:]])


def write_convergence(path, rows):
    """Rows of ``(case, scheme, k, level, h, dofs, errors, rates or None)``."""
    variables = list(rows[0][6])
    header = ["case", "scheme", "k", "level", "h", "dofs"] + [f"err_{v}" for v in variables] \
        + [f"rate_{v}" for v in variables]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for case, scheme, k, level, h, dofs, err, rates in rows:
            tail = [""] * len(variables) if rates is None else [_fmt(rates[v]) for v in variables]
            w.writerow([case, scheme, k, level, _fmt(h), dofs] + [_fmt(err[v]) for v in variables] + tail)


# -- solve ---------------------------------------------------------------------------

def run_case(cfg):
    """Solve the configured case and write its artifacts; returns an exit code."""
    case = cfg.case_object()
    mesh = cfg.build_mesh()
    disc = discretize(case, mesh, cfg.k, cfg.scheme, bindings=cfg.bindings(case, mesh))
    shock = ShockCapture(cfg.shock) if cfg.shock.mode != "off" else None
    if shock is not None:
        shock.check(disc)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    code = EXIT_OK
    try:
        result = newton_march(disc, case.initial_state(disc), cfg.march(case), shock=shock)
    except NonPhysicalState as exc:
        log.error("%s", exc)
        print(f"non-physical state: step {exc.step} min_rho {exc.min_rho:.6e} min_p {exc.min_p:.6e}",
              file=sys.stderr)
        result, code = exc.result, EXIT_NONPHYSICAL
    except MaxIterations as exc:
        log.error("%s", exc)
        print(f"iteration budget exhausted: {exc}", file=sys.stderr)
        result, code = exc.result, EXIT_MAXITER
    eps_art = shock.nodal_field(disc, result.state) if shock is not None else None
    write_field(out_dir / cfg.field_file, disc, result.state, eps_art)
    write_history(out_dir / cfg.history_file, result.history)
    if case.exact is not None and code == EXIT_OK:
        err = grouped_errors(disc, result.state, case.exact, case.mixed)
        write_convergence(out_dir / cfg.convergence_file,
                          [(cfg.case, cfg.scheme, cfg.k, cfg.level, mesh.h, disc.ndof, err, None)])
    last = result.history[-1]
    print(f"{cfg.case} k={cfg.k} {cfg.scheme}: steps {last['step']} "
          f"res_continuity {last['res_continuity']:.3e} min_p {result.min_p:.6e} exit {code}")
    return code


# -- convergence study ---------------------------------------------------------------

def _study_point(cfg, scheme, k, level):
    """Solve one (scheme, k, level) point and return ``(h, dofs, errors)``."""
    case = cfg.case_object()
    mesh = cfg.build_mesh(level)
    disc = discretize(case, mesh, k, scheme, bindings=cfg.bindings(case, mesh))
    result = newton_march(disc, case.initial_state(disc), cfg.march(case))
    return mesh.h, disc.ndof, grouped_errors(disc, result.state, case.exact, case.mixed)


def run_convergence_study(cfg, threads=1):
    """Run every (scheme, k, level) point, write the rate CSV and return an exit code.

    A block passes when the last-interval rate of every variable is at least
    ``k + 1 - rate_slack``.
    """
    case = cfg.case_object()
    if case.exact is None:
        raise HDGError(f"case {cfg.case!r} has no exact solution")
    levels = sorted(set(cfg.levels))
    if len(levels) < 2:
        raise DegenerateTable("a convergence study needs at least two mesh levels")
    schemes = cfg.schemes or (cfg.scheme,)
    degrees = cfg.k_list or (cfg.k,)
    jobs = [(s, k, L) for s in schemes for k in degrees for L in levels]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_study_point, cfg, *j) for j in jobs]
            points = [f.result() for f in futures]
    else:
        points = [_study_point(cfg, *j) for j in jobs]
    results = dict(zip(jobs, points))

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    code = EXIT_OK
    for s in schemes:
        for k in degrees:
            table = ConvergenceTable()
            prev = None
            for L in levels:
                h, dofs, err = results[(s, k, L)]
                table.add(h, dofs, err)
                rates = None
                if prev is not None:
                    rates = {v: math.log(err[v] / prev[1][v]) / math.log(h / prev[0]) for v in err}
                rows.append((cfg.case, s, k, L, h, dofs, err, rates))
                prev = (h, err)
            last = {v: r[1] for v, r in convergence_rate(table).items()}
            need = k + 1 - cfg.rate_slack
            ok = all(r >= need for r in last.values())
            code = code if ok else EXIT_RATE
            rates = " ".join(f"{v}={r:.2f}" for v, r in last.items())
            print(f"{'PASS' if ok else 'FAIL'} {cfg.case} {s} k={k}: {rates} (need >= {need:.2f})")
    write_convergence(out_dir / cfg.convergence_file, rows)
    return code


# -- flux table ----------------------------------------------------------------------

def flux_table(scheme, state, normal=(1.0, 0.0), element_state=None, gamma=1.4):
    """Text table of ``F(u_hat) n``, ``tau`` and the trace flux for one trace state."""
    gas = ph.GasModel(gamma=gamma)
    sch = parse_scheme(scheme)
    uhat = np.asarray(state, dtype=float)
    u_e = uhat if element_state is None else np.asarray(element_state, dtype=float)
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    Fn = ph.normal_flux(uhat, n, gamma)
    tau = stabilization_tau(sch, uhat, n, gas, u_e=u_e)
    flux = trace_flux(uhat, u_e, n, sch, gas)
    rows = [f"scheme {sch}", "u_hat " + " ".join(f"{v:.10g}" for v in uhat),
            "u_e   " + " ".join(f"{v:.10g}" for v in u_e),
            "n     " + " ".join(f"{v:.10g}" for v in n),
            "F(u_hat).n " + " ".join(f"{v: .10e}" for v in Fn), "tau"]
    rows += ["  " + " ".join(f"{v: .10e}" for v in r) for r in tau]
    rows.append("trace flux " + " ".join(f"{v: .10e}" for v in flux))
    return "\n".join(rows)


# -- entry point ---------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker processes for independent study runs")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="reserved; has no effect on results")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="hdgflow", parents=[common],
                                description="HDG solver for compressible flow",
                                epilog="exit codes: 0 ok, 1 usage, 2 non-physical state, "
                                       "3 max iterations, 4 rate below threshold")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="steady solve of a configured case")
    s.add_argument("config")
    c = sub.add_parser("converge", parents=[common], help="h-convergence study")
    c.add_argument("config")
    f = sub.add_parser("flux-table", parents=[common], help="trace flux for one state (debug)")
    f.add_argument("scheme")
    f.add_argument("state", nargs=4, type=float, metavar="U",
                   help="trace state rho rhovx rhovy rhoE")
    f.add_argument("--normal", nargs=2, type=float, default=(1.0, 0.0))
    f.add_argument("--element-state", nargs=4, type=float, default=None)
    f.add_argument("--gamma", type=float, default=1.4)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = getattr(args, "threads", 1)
    verbose = getattr(args, "verbose", 0)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if threads < 1:
        parser.error("--threads must be at least 1")
    try:
        if args.command == "flux-table":
            print(flux_table(args.scheme, args.state, args.normal, args.element_state, args.gamma))
            return EXIT_OK
        cfg = load_config(args.config)
        if args.command == "solve":
            return run_case(cfg)
        return run_convergence_study(cfg, threads)
    except NonPhysicalState as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONPHYSICAL
    except MaxIterations as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MAXITER
    except (HDGError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
