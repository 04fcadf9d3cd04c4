"""Command-line front end.

Exit codes: 0 ok, 2 instance parse error, 3 emit/config error,
4 solver failure, 5 verification verdict failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, model as qp, verify
from .bilinear import EnvelopeOracle, Method, RelaxationConfig, default_lower_depth
from .compiler import CompileError, dual_bound, relax_problem
from .milp import ExternalSolverError, MilpError, SOLVER_CMD_ENV, solve_builtin, solve_external, write_mps
from .rational import ZERO, rat
from .sawtooth import SawtoothDepths

EXIT_PARSE = 2
EXIT_EMIT = 3
EXIT_SOLVER = 4
EXIT_VERIFY = 5

METHOD_CHOICES = [m.value for m in Method]
TABLE_METHODS = [Method.NMDT, Method.DNMDT, Method.HYBS, Method.BIN2, Method.BIN3]


def _add_method_args(p, required=True):
    p.add_argument("--method", choices=METHOD_CHOICES, required=required)
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--L1", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--no-mccormick", action="store_true",
                   help="drop the box McCormick rows from separable methods")


def _config(args):
    return RelaxationConfig(
        Method(args.method), args.L, args.L1, lam=args.lam,
        include_mccormick=not getattr(args, "no_mccormick", False))


def _load_instance(path):
    with open(path) as fh:
        return qp.parse_instance(fh.read())


def cmd_relax(args):
    prob = _load_instance(args.infile)
    cfg = _config(args)
    mdl, _, report = relax_problem(prob, cfg)
    with open(args.out, "w") as fh:
        fh.write(write_mps(mdl))
    report_path = args.report or os.path.splitext(args.out)[0] + ".report.json"
    with open(report_path, "w") as fh:
        fh.write(report.to_json() + "\n")
    print(f"{mdl.name}: {report.n_binaries} binaries, "
          f"{report.n_continuous} continuous, {report.n_rows} rows "
          f"-> {args.out}")
    return 0


def cmd_solve(args):
    prob = _load_instance(args.infile)
    cfg = _config(args)
    template = args.solver or os.environ.get(SOLVER_CMD_ENV)
    if template and template != "builtin":
        bound = dual_bound(prob, cfg, template)
    else:
        bound = dual_bound(prob, cfg, "builtin")
    print(f"dual bound ({cfg.method.value}, L={cfg.L}, L1={cfg.L1}): {float(bound)}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"method": cfg.method.value, "L": cfg.L, "L1": cfg.L1,
                       "dual_bound": float(bound), "exact": str(bound)}, fh, indent=2)
    return 0


def cmd_analyze(args):
    methods = [Method(args.method)] if args.method else TABLE_METHODS
    depths = [args.L] if args.L is not None else [1, 2, 3, 4]
    rows = []
    for method in methods:
        for L in depths:
            L1 = args.L1 if args.L1 is not None else default_lower_depth(L)
            cfg = RelaxationConfig(method, L, L1, include_mccormick=False)
            rep = analysis.empirical_error(cfg, grid_exp=args.grid_exp,
                                           mc_samples=args.mc, seed=args.seed,
                                           l1_infinity=False)
            amax = rep.analytic_max
            amax_hi = amax[1] if isinstance(amax, tuple) else amax
            rows.append((method.value, L, L1, float(amax_hi),
                         float(rep.analytic_avg), rep.empirical_max,
                         rep.empirical_avg))
    header = f"{'method':8s} {'L':>2s} {'L1':>3s} {'max(analytic)':>14s} " \
             f"{'avg(analytic)':>14s} {'max(grid)':>12s} {'avg(mc)':>12s}"
    print(header)
    print("-" * len(header))
    for m, L, L1, amax, aavg, emax, eavg in rows:
        eavg_s = f"{eavg:12.6g}" if eavg == eavg else " " * 11 + "-"
        print(f"{m:8s} {L:2d} {L1:3d} {amax:14.8f} {aavg:14.8f} {emax:12.6g} {eavg_s}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("method,L,L1,analytic_max,analytic_avg,empirical_max,empirical_avg\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
    return 0


def cmd_envelope(args):
    cfg = _config(args)
    oracle = EnvelopeOracle(cfg, (ZERO, rat(1)), (ZERO, rat(1)))
    n = args.grid
    ticks = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(ticks, ticks, indexing="ij")
    lo, hi = oracle.band_np(X, Y)
    out = args.out or "-"
    fh = sys.stdout if out == "-" else open(out, "w")
    try:
        fh.write("x,y,zmin,zmax\n")
        for i in range(n):
            for j in range(n):
                fh.write(f"{X[i, j]:.10g},{Y[i, j]:.10g},{lo[i, j]:.12g},{hi[i, j]:.12g}\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_verify(args):
    ok = True
    payload = {}
    if args.what == "sharpness":
        cfg = _config(args)
        rep = verify.check_sharpness(cfg, grid_denom=args.grid)
        payload = rep.to_json()
        expected_sharp = cfg.method in (Method.BIN2, Method.BIN3, Method.HYBS,
                                        Method.TDNMDT)
        ok = rep.sharp if expected_sharp else True
        payload["verdict"] = "sharp" if rep.sharp else "not sharp"
    elif args.what == "hereditary":
        depths = SawtoothDepths(args.L, args.L1 if args.L1 is not None else args.L)
        rep = verify.check_hereditary(depths, grid_denom=args.grid)
        payload = rep.to_json()
        ok = rep.hereditarily_sharp
        payload["verdict"] = ("hereditarily sharp" if ok else "not hereditarily sharp")
    elif args.what == "counterexamples":
        ces = verify.counterexamples()
        payload = {"counterexamples": [c.to_json() for c in ces]}
        ok = all(c.strict for c in ces)
        payload["verdict"] = "all strict" if ok else "some gap not strict"
    else:  # membership
        cfg = _config(args)
        n = verify.check_membership(cfg, n_points=args.points, seed=args.seed)
        payload = {"method": cfg.method.value, "points_checked": n,
                   "verdict": "all graph points feasible"}
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if ok else EXIT_VERIFY


def build_parser():
    ap = argparse.ArgumentParser(prog="qrelax",
                                 description="MIQCQP relaxation compiler and verifier")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("relax", help="compile an instance to MPS")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    _add_method_args(p)
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("solve", help="dual bound of the relaxation")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--solver", default=None,
                   help="'builtin' or an external template with {mps} and {sol}")
    p.add_argument("--json", default=None)
    _add_method_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("analyze", help="error-bound table and CSV")
    p.add_argument("--method", choices=METHOD_CHOICES, default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--L1", type=int, default=None)
    p.add_argument("--grid-exp", type=int, default=8)
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo samples for avg")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("envelope", help="CSV of the pointwise envelope band")
    p.add_argument("--grid", type=int, default=33)
    p.add_argument("--out", default=None)
    _add_method_args(p)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("verify", help="machine-check structural claims")
    p.add_argument("what", choices=["sharpness", "hereditary", "counterexamples",
                                    "membership"])
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    _add_method_args(p, required=False)
    p.set_defaults(func=cmd_verify)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (qp.InstanceError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ExternalSolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (CompileError, MilpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMIT


if __name__ == "__main__":
    sys.exit(main())
