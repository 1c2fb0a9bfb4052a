"""wavectl command line interface.

Exit codes: 0 success, 2 configuration or verification failure (for
example a fixed point that did not converge), 3 solver error.
Every command prints one key=value summary line on success and writes
its artifacts (CSV files plus resolved.cfg) into the output directory.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import parse_config, resolve_config
from .control import (
    assemble_system,
    carleman_ratio,
    make_random_dual_field,
    optimality_check,
    solve_control,
)
from .errors import ConfigError, WaveControlError
from .fixedpoint import (
    ClassSpec,
    check_class,
    contraction_report,
    run_fixed_point,
    source_bound_check,
    verify_growth,
)
from .forward import verify_control
from .grid import CSV_FMT, save_field

DEFAULT_SEED = 42


def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                CSV_FMT % v if isinstance(v, float) else str(v) for v in row
            ) + "\n")


def _write_boundary(path, grid, v):
    rows = []
    for n in range(grid.nt + 1):
        for k, b in enumerate(grid.boundary):
            rows.append((b.face, k, n, float(v[n, k])))
    _write_rows(path, ["face", "node", "it", "value"], rows)


def _prepare(run):
    os.makedirs(run.out_dir, exist_ok=True)
    with open(os.path.join(run.out_dir, "resolved.cfg"), "w") as fh:
        fh.write(run.echo_lines())


def _summary(**kv):
    print(" ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                   for k, v in kv.items()))


def _report_rows(rows, path):
    _write_rows(path, ["name", "lhs", "rhs", "ratio", "s", "r"],
                [(r["name"], r["lhs"], r["rhs"], r["ratio"], r["s"], r["r"])
                 for r in rows])


def cmd_linear_solve(run, args):
    system = assemble_system(run.grid, run.params, run.cutoffs,
                             epsilon=run.epsilon, solver=run.solver)
    pair = solve_control(system, u0=run.u0, u1=run.u1)
    check = verify_control(pair, run.grid, run.u0, run.u1)
    from .control import estimate_report
    rows = estimate_report(pair, system, u0=run.u0, u1=run.u1)
    save_field(pair.y, os.path.join(run.out_dir, "y.csv"))
    save_field(pair.w, os.path.join(run.out_dir, "w.csv"))
    _write_boundary(os.path.join(run.out_dir, "v.csv"), run.grid, pair.v)
    _report_rows(rows, os.path.join(run.out_dir, "report.csv"))
    _summary(command="linear-solve", s=run.s, residual=check["residual"],
             final_residual=pair.final_residual,
             estimate_ratio=rows[0]["ratio"])
    return 0


def cmd_semilinear_solve(run, args):
    system = assemble_system(run.grid, run.params, run.cutoffs,
                             epsilon=run.epsilon, solver=run.solver)
    spec = ClassSpec(kind=run.class_kind, s=run.s)
    pair, trace = run_fixed_point(system, run.u0, run.u1, run.nonlinearity,
                                  tol=run.tol, max_iter=run.max_iter, spec=spec)
    check = verify_control(pair, run.grid, run.u0, run.u1, f=run.nonlinearity)
    report = contraction_report(trace, run.nonlinearity, run.s, run.params.c)
    save_field(pair.y, os.path.join(run.out_dir, "y.csv"))
    save_field(pair.w, os.path.join(run.out_dir, "w.csv"))
    _write_boundary(os.path.join(run.out_dir, "v.csv"), run.grid, pair.v)
    _write_rows(os.path.join(run.out_dir, "trace.csv"),
                ["k", "d_k", "d_boundary_k", "ratio", "forward_residual"],
                [(r["k"], r["d_k"], r["d_boundary_k"], r["ratio"],
                  r["forward_residual"]) for r in trace.rows()])
    bound = source_bound_check(pair.y, run.nonlinearity, system)
    _write_rows(os.path.join(run.out_dir, "report.csv"),
                ["name", "value"],
                [("iterations", float(len(trace.d))),
                 ("converged", float(trace.converged)),
                 ("max_ratio", report["max_ratio"]),
                 ("mean_ratio", report["mean_ratio"]),
                 ("predicted_shape", report["predicted_shape"]),
                 ("forward_residual", check["residual"]),
                 ("source_bound_ratio", bound["ratio"])])
    if trace.diverged or not trace.converged:
        # verification failure, distinct from a hard solver error
        _summary(command="semilinear-solve", converged=0,
                 iterations=len(trace.d), last_d=trace.d[-1])
        return 2
    _summary(command="semilinear-solve", converged=1, iterations=len(trace.d),
             residual=check["residual"], max_ratio=report["max_ratio"])
    return 0


def cmd_verify_carleman(run, args):
    system = assemble_system(run.grid, run.params, run.cutoffs,
                             epsilon=run.epsilon, solver=run.solver)
    rng = np.random.default_rng(args.seed)
    rows = []
    for i in range(args.samples):
        w = make_random_dual_field(run.grid, rng)
        rows.append((i, float(carleman_ratio(w, system))))
    ratios = np.array([r for _, r in rows])
    _write_rows(os.path.join(run.out_dir, "carleman.csv"),
                ["sample", "ratio"], rows)
    _summary(command="verify-carleman", samples=args.samples, s=run.s,
             min_ratio=float(ratios.min()), max_ratio=float(ratios.max()),
             spread=float(ratios.max() / ratios.min()))
    return 0


def cmd_verify_optimality(run, args):
    system = assemble_system(run.grid, run.params, run.cutoffs,
                             epsilon=run.epsilon, solver=run.solver)
    pair = solve_control(system, u0=run.u0, u1=run.u1)
    result = optimality_check(pair, system, u0=run.u0, u1=run.u1)
    _write_rows(os.path.join(run.out_dir, "report.csv"), ["name", "value"],
                [("kkt_discrepancy", result["discrepancy"]),
                 ("objective", result["aux"]["objective"])])
    _summary(command="verify-optimality", discrepancy=result["discrepancy"])
    return 0


def cmd_growth_check(run, args):
    nl = run.nonlinearity
    result = verify_growth(nl)
    _write_rows(os.path.join(run.out_dir, "report.csv"), ["name", "value"],
                [("worst_slack", result["worst_slack"]),
                 ("worst_slack_prime", result.get("worst_slack_prime", float("nan")))])
    _summary(command="growth-check", nonlinearity=nl.name, p=nl.p,
             worst_slack=result["worst_slack"])
    return 0


_SWEEPABLE = {
    "s": ("weights", "s"),
    "nx": ("grid", "nx"),
    "beta_star": ("nonlinearity", "beta_star"),
    "p": ("nonlinearity", "p"),
    "lambda": ("weights", "lambda"),
}


def cmd_sweep(run, args):
    if args.param not in _SWEEPABLE:
        raise ConfigError(f"--param must be one of {sorted(_SWEEPABLE)}")
    sec_key = _SWEEPABLE[args.param]
    rows = []
    for raw in args.values.split(","):
        cfg = parse_config(args.config, overrides={sec_key: raw})
        sub = resolve_config(cfg)
        system = assemble_system(sub.grid, sub.params, sub.cutoffs,
                                 epsilon=sub.epsilon, solver=sub.solver)
        if sub.nonlinearity.name == "zero":
            pair = solve_control(system, u0=sub.u0, u1=sub.u1)
            check = verify_control(pair, sub.grid, sub.u0, sub.u1)
            rows.append((args.param, raw, check["residual"],
                         pair.final_residual, float("nan")))
        else:
            spec = ClassSpec(kind=sub.class_kind, s=sub.s)
            pair, trace = run_fixed_point(system, sub.u0, sub.u1,
                                          sub.nonlinearity, tol=sub.tol,
                                          max_iter=sub.max_iter, spec=spec)
            check = verify_control(pair, sub.grid, sub.u0, sub.u1,
                                   f=sub.nonlinearity)
            ratios = [r for r in trace.ratios if np.isfinite(r)]
            rows.append((args.param, raw, check["residual"],
                         pair.final_residual,
                         max(ratios) if ratios else float("nan")))
    _write_rows(os.path.join(run.out_dir, "sweep.csv"),
                ["param", "value", "forward_residual", "final_residual",
                 "max_contraction_ratio"], rows)
    _summary(command="sweep", param=args.param, points=len(rows))
    return 0


_COMMANDS = {
    "linear-solve": cmd_linear_solve,
    "semilinear-solve": cmd_semilinear_solve,
    "verify-carleman": cmd_verify_carleman,
    "verify-optimality": cmd_verify_optimality,
    "growth-check": cmd_growth_check,
    "sweep": cmd_sweep,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wavectl",
        description="Boundary control of wave equations by Carleman-weighted "
                    "variational solves and fixed-point iteration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI run configuration")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        if name == "verify-carleman":
            p.add_argument("--samples", type=int, default=20)
        if name == "sweep":
            p.add_argument("--param", required=True)
            p.add_argument("--values", required=True,
                           help="comma-separated parameter values")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run = resolve_config(parse_config(args.config))
    except (WaveControlError, OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _prepare(run)
    try:
        return _COMMANDS[args.command](run, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except WaveControlError as exc:
        with open(os.path.join(run.out_dir, "error.txt"), "w") as fh:
            fh.write(f"{type(exc).__name__}: {exc}\n")
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
