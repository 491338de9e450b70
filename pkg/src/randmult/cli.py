"""Command line entry point: ``randmult <command> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .decomp import CSV_HEADER, decompose, variance_V
from .experiments import ALL_SUITES, ASSERTING, EXPLORATORY, ExperimentConfig, run_suite
from .primes import build_prime_table
from .rmf import sample_model

VERIFY = {
    "hoeffding": "hoeffding", "hoeffding-cond": "hoeffding-cond", "doob2d": "doob2d", "euler": "euler",
    "parseval": "parseval", "hyper": "hyper", "gaussian": "gaussian", "fourier": "fourier",
    "submartingale": "submartingale", "super-step": "super-step", "nij-moment": "nij-moment",
    "tau-bound": "tau-bound", "decompose": "decompose", "variance": "variance",
}
SCAN = {"fluctuation": "fluctuation", "moments": "moments", "variance-event": "variance-event", "i0": "i0"}

# which trial-count field --trials overrides for each suite
_TRIAL_FIELD = {
    "hoeffding": "mc_trials", "hoeffding-cond": "mc_trials", "doob2d": "mc_trials", "euler": "euler_trials",
    "gaussian": "gaussian_trials", "super-step": "super_trials", "nij-moment": "nij_trials",
    "decompose": "decomp_seeds", "variance": "decomp_seeds", "fluctuation": "scan_seeds",
    "moments": "moment_seeds", "variance-event": "variance_seeds", "i0": "i0_trials",
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=["steinhaus", "rademacher"])
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--x-max", type=int)
    common.add_argument("--trials", type=int, help="override the trial count of the selected suite(s)")
    common.add_argument("--config", help="INI file with an [experiment] section")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int)

    p = argparse.ArgumentParser(prog="randmult", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sch = sub.add_parser("schedule", parents=[common], help="schedule utilities")
    sch.add_argument("action", choices=["show"])
    sub.add_parser("decompose", parents=[common], help="decompose M_f(x_max) for one seed")
    sub.add_parser("variance", parents=[common], help="V(x_max) and its per-block split for one seed")
    v = sub.add_parser("verify", parents=[common], help="run one asserting check")
    v.add_argument("check", choices=sorted(VERIFY))
    s = sub.add_parser("scan", parents=[common], help="run one exploratory scan")
    s.add_argument("scan", choices=sorted(SCAN))
    r = sub.add_parser("run", parents=[common], help="run several suites")
    r.add_argument("suites", nargs="*", help=f"default: all of {', '.join(ALL_SUITES)}")
    sub.add_parser("config", parents=[common], help="print the effective config")
    return p


def _config(args, suites=()) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.mode:
        over["mode"] = args.mode
    if args.seed is not None:
        over["base_seed"] = args.seed
    if args.x_max is not None:
        over["x_max"] = args.x_max
    if args.out:
        over["out_dir"] = args.out
    if args.jobs is not None:
        over["jobs"] = args.jobs
    if args.trials is not None:
        for name in suites:
            if name in _TRIAL_FIELD:
                over[_TRIAL_FIELD[name]] = args.trials
    return dataclasses.replace(cfg, **over) if over else cfg


def _print_suites(report) -> None:
    for s in report.suites:
        tag = "check" if s.asserting else "scan"
        status = ("PASS" if s.ok else "FAIL") if s.asserting else "done"
        extra = f" {json.dumps(s.summary, sort_keys=True)}" if s.summary else ""
        print(f"{tag:5s} {s.name:15s} {status}{extra}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "schedule":
        print(_config(args).schedule().to_text(), end="")
        return 0
    if args.command == "config":
        print(_config(args).to_text(), end="")
        return 0
    if args.command in ("decompose", "variance"):
        cfg = _config(args)
        table = build_prime_table(cfg.x_max)
        model = sample_model(cfg.mode, cfg.base_seed, cfg.x_max, table)
        sched = cfg.schedule()
        if args.command == "decompose":
            r = decompose(model, table, sched, cfg.x_max)
            print(",".join(CSV_HEADER))
            print(",".join(str(v) for v in r.csv_row()))
        else:
            r = variance_V(model, table, sched, cfg.x_max)
            print(json.dumps({"x": r.x, "V": r.V, "per_block": list(r.per_block)}))
        return 0
    if args.command == "verify":
        names = [VERIFY[args.check]]
    elif args.command == "scan":
        names = [SCAN[args.scan]]
    else:
        names = args.suites or list(ALL_SUITES)
        unknown = [n for n in names if n not in ALL_SUITES]
        if unknown:
            print(f"unknown suites: {', '.join(unknown)}", file=sys.stderr)
            return 2
    cfg = _config(args, names)
    report = run_suite(cfg, names)
    _print_suites(report)
    print(f"report written to {cfg.out_dir}/report.json")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
