"""Command-line front end: run trials, sweeps and gain reports.

Exit status is 0 only when the requested work finished without invariant
violations (containment, constraints, obstacle clearance, entropy
monotonicity) and without controller infeasibility.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import run_trial, sweep, verify_gains_report, write_sweep, write_trial
from .scenarios import (CONTROLLER_IDS, Scenario, default_cstr_scenario,
                        default_unicycle_scenario)


def _load_scenario(spec: str) -> Scenario:
    if spec == "cstr":
        return default_cstr_scenario()
    if spec == "unicycle":
        return default_unicycle_scenario()
    return Scenario.load(spec)


def _cmd_run(args) -> int:
    sc = _load_scenario(args.scenario)
    if args.seed is not None:
        sc = sc.replace(seed=int(args.seed))
    result = run_trial(sc, args.controller, sc.seed)
    if args.out:
        paths = write_trial(result, args.out)
        print(f"wrote {paths['csv']}, {paths['json']}, {paths['timing']}")
    print(f"controller={result.controller} seed={result.seed} "
          f"steps={len(result.records)} mse={result.mse:.6g}")
    print(f"violations={result.violations}")
    if result.final_entropy is not None:
        print(f"final_entropy={result.final_entropy:.6g}")
    if result.failure is not None:
        print(f"FAILURE: {result.failure}", file=sys.stderr)
        return 1
    return 0 if result.ok else 1


def _cmd_sweep(args) -> int:
    sc = _load_scenario(args.scenario)
    values = [float(v) for v in args.values.split(",")]
    seeds = list(range(args.seeds))
    rows = sweep(sc, args.param, values, seeds,
                 controllers=tuple(args.controllers.split(",")))
    if args.out:
        write_sweep(rows, args.out)
        print(f"wrote {args.out}")
    bad = 0
    for r in rows:
        print(f"{r['param']}={r['value']:g} {r['controller']}: "
              f"mse {r['mse_mean']:.6g} +- {r['mse_std']:.3g}, "
              f"violations {r['violations']}")
        bad += r["violations"]
    return 0 if bad == 0 else 1


def _cmd_verify_gains(args) -> int:
    sc = _load_scenario(args.scenario)
    report = verify_gains_report(sc)
    print(json.dumps(report, sort_keys=True, indent=2))
    ok = report["rho_obs"] < 1.0 and report["rho_ctl"] < 1.0 and report["rho_joint"] < 1.0
    return 0 if ok else 1


def _cmd_selftest(args) -> int:
    sc = default_cstr_scenario(trial_length=10)
    result = run_trial(sc, "irof", seed=0)
    print(f"cstr smoke: steps={len(result.records)} mse={result.mse:.6g} "
          f"violations={result.violations}")
    return 0 if result.ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="intervalmpc",
        description="Robust output-feedback MPC with interval observers")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one closed-loop trial")
    p_run.add_argument("--scenario", required=True,
                       help="'cstr', 'unicycle', or a scenario JSON path")
    p_run.add_argument("--controller", default="irof", choices=CONTROLLER_IDS)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None,
                       help="directory for results.csv/results.json/timing.json")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="noise-scale sweep with paired seeds")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--param", required=True, choices=("alpha", "beta"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated scale factors")
    p_sweep.add_argument("--seeds", type=int, default=10,
                         help="number of paired seeds (0..seeds-1)")
    p_sweep.add_argument("--controllers", default="irof,openloop")
    p_sweep.add_argument("--out", default=None, help="CSV output path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_ver = sub.add_parser("verify-gains",
                           help="print certified contraction radii and widths")
    p_ver.add_argument("--scenario", required=True)
    p_ver.set_defaults(func=_cmd_verify_gains)

    p_self = sub.add_parser("selftest", help="short reactor smoke run")
    p_self.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
