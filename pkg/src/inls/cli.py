"""Command-line entry point: ``inls <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .classifier import INCONCLUSIVE
from .coefficient import ProblemParams, make_coefficient
from .config import RunConfig, resolve_output_dir
from .errors import ConfigError, NumericFailure, ParameterDomainError, StageError, TruncationError
from .groundstate import build_ground_state, pohozaev_boundary, shoot
from .harness import _coefficient_report, run_scenario, sweep, validate, verify

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TRUNCATED = 2


def _global_flags():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="run configuration (INI or JSON)")
    parent.add_argument("--json", action="store_true", help="machine-readable JSON output")
    parent.add_argument("--out", help="output directory (overrides INLS_OUT_DIR and the config)")
    parent.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    parent.add_argument("--refine", action="store_true",
                        help="also run a doubled-resolution companion to cross-check the verdict")
    parent.add_argument("-v", "--verbose", action="store_true")
    return parent


def _coefficient_flags(p):
    p.add_argument("--family", default=None, help="PurePower, Rational, PiecewisePlateau, Zero")
    p.add_argument("--b", type=float, default=None, help="singularity exponent, 0 < b < 4/3")
    for k in ("a", "d", "c"):
        p.add_argument(f"--{k}", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = argparse.ArgumentParser(prog="inls", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-coefficient", parents=[parent], help="evaluate the coefficient conditions")
    _coefficient_flags(p)
    p = sub.add_parser("ground-state", parents=[parent], help="ground-state integrals for b")
    p.add_argument("--b", type=float, default=None)
    p = sub.add_parser("shoot", parents=[parent], help="shoot the ground-state ODE for g")
    _coefficient_flags(p)
    p.add_argument("--q0", type=float, required=True, help="initial height Q(0)")
    p.add_argument("--r-max", type=float, default=1e4)
    p.add_argument("--samples", type=int, default=2000)
    sub.add_parser("evolve", parents=[parent], help="run one scenario and issue a verdict")
    sub.add_parser("sweep", parents=[parent], help="parameter sweep producing a phase table")
    p = sub.add_parser("verify", parents=[parent], help="run the acceptance suite")
    p.add_argument("--criteria", type=int, nargs="*", default=None, help="subset of criterion numbers")
    p.add_argument("--dt-scale", type=float, default=1.0,
                   help="multiply the conservation-run step (fault injection)")
    return parser


def _coefficient_from_args(args):
    sec = {}
    if args.config:
        sec = RunConfig.load(args.config).section("coefficient")
    for k in ("family", "b", "a", "d", "c"):
        v = getattr(args, k, None)
        if v is not None:
            sec[k] = v
    if "b" not in sec:
        raise ConfigError("b is required (flag --b or coefficient.b in the config)", block="coefficient")
    params = ProblemParams(sec["b"])
    fp = {k: sec[k] for k in ("a", "d", "c") if k in sec}
    return params, make_coefficient(sec.get("family", "PurePower"), fp, params), sec


def _emit_flat(items):
    for k, v in items:
        print(f"{k}={v}")


def cmd_check_coefficient(args):
    params, coef, sec = _coefficient_from_args(args)
    cfg = RunConfig.from_dict({"coefficient": sec, "initial": {"profile": "Gaussian"},
                               "grid": {"r_max": 1.0, "n": 1}})
    report = _coefficient_report(validate(cfg))
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        _emit_flat(report.flat_items())
    return EXIT_OK


def cmd_ground_state(args):
    b = args.b
    if b is None and args.config:
        b = RunConfig.load(args.config).get("coefficient", "b")
    if b is None:
        raise ConfigError("b is required", block="coefficient")
    s = build_ground_state(ProblemParams(b)).summary()
    keys = ("b", "grad_norm_sq", "potential_integral", "threshold_energy", "best_constant")
    if args.json:
        print(json.dumps({k: s[k] for k in keys}, indent=2))
    else:
        _emit_flat((k, repr(s[k])) for k in keys)
    return EXIT_OK


def cmd_shoot(args):
    params, coef, _ = _coefficient_from_args(args)
    res = shoot(coef, args.q0, args.r_max, params, n_samples=args.samples)
    bdry = pohozaev_boundary(coef, res.r, res.Q, res.Qprime, params)
    cols = np.column_stack([res.r, res.Q, res.Qprime, res.H_samples, res.V_samples, bdry])
    header = ["r", "Q", "Qprime", "H", "V_int", "V_bdry"]

    def write(fh):
        w = csv.writer(fh)
        w.writerow(header)
        for row in cols:
            w.writerow([f"{v:.17g}" for v in row])

    path = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"shoot-{coef.family}-b{params.b:g}-q{args.q0:g}.csv"
        with open(path, "w", newline="") as fh:
            write(fh)
    summary = {"Q0": args.q0, "first_zero": res.first_zero, "pohozaev_residual": res.pohozaev_residual,
               "csv": str(path) if path else None}
    if args.json:
        print(json.dumps(summary, indent=2))
    elif path is None:
        write(sys.stdout)
    else:
        _emit_flat(summary.items())
    return EXIT_OK


def _need_config(args):
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    return RunConfig.load(args.config)


def cmd_evolve(args):
    cfg = _need_config(args)
    run = run_scenario(cfg, out_dir=args.out, refine=args.refine)
    v = run.verdict
    if args.json:
        print(json.dumps({"config_hash": cfg.hash, **v.to_dict()}, indent=2))
    else:
        print(f"region={v.region}")
        print(f"verdict={v.kind}")
        print(f"stop_reason={run.stop_reason} stop_time={run.stop_time:.6g}")
        if run.refinement:
            print(f"refined stop_reason={run.refinement['stop_reason']} "
                  f"stop_time={run.refinement['stop_time']:.6g}")
        for e in v.evidence:
            mark = {True: "ok", False: "VIOLATED", None: "n/a"}[e.ok]
            print(f"  [{mark}] {e.name}: {e.detail}" + (f" (value {e.value:.6g})" if e.value is not None else ""))
        print(f"outputs in {resolve_output_dir(cfg, args.out)}: {', '.join(run.paths.values())}")
    if v.kind == INCONCLUSIVE and run.truncation_flag:
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_sweep(args):
    cfg = _need_config(args)
    rows, path = sweep(cfg, out_dir=args.out, threads=max(1, args.threads))
    if args.json:
        print(json.dumps({"phase_table": str(path), "rows": rows}, indent=2))
    else:
        print(f"phase table: {path}")
        for r in rows:
            print(f"  #{r['index']}: region={r['region'] or '-'} verdict={r['verdict']}"
                  + (f" error={r['error']}" if r.get("error") else ""))
    return EXIT_OK


def cmd_verify(args):
    lines = []

    def stream(line):
        lines.append(line)
        if not args.json:
            print(line, flush=True)

    ok = verify(args.config, stream=stream, dt_scale=args.dt_scale, criteria=args.criteria)
    if args.json:
        print(json.dumps({"passed": ok, "lines": lines}, indent=2))
    return EXIT_OK if ok else EXIT_ERROR


COMMANDS = {
    "check-coefficient": cmd_check_coefficient,
    "ground-state": cmd_ground_state,
    "shoot": cmd_shoot,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterDomainError, StageError, TruncationError, NumericFailure,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
