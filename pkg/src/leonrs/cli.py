"""Command line: ``run``, ``sweep``, ``baselines`` and ``convergence``.

Exit status is 0 on success. Failures print one line
``error: <category>: <message>`` to stderr and exit with the category's code
(see :data:`EXIT_CODES`). ``LEONRS_LOG`` sets the log level (default WARNING).
"""

import argparse
import json
import logging
import os
import sys

import yaml

from . import harness
from .config import ScenarioConfig, full_scale, load_config
from .errors import LeonrsError

EXIT_CODES = {
    "error": 1,
    "usage": 2,
    "config": 3,
    "geometry": 4,
    "visibility": 4,
    "unobservable": 5,
    "no-signal": 5,
    "weighting": 5,
    "window": 5,
    "infeasible": 6,
    "unbounded": 7,
    "solver": 7,
    "io": 8,
}


def _config(args):
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if getattr(args, "paper_scale", False):
        cfg = full_scale(cfg)
    return cfg


def _values(text):
    """Comma-separated list; each item parsed as a YAML scalar."""
    return [yaml.safe_load(tok) for tok in text.split(",") if tok.strip()]


def cmd_run(args):
    cfg = _config(args)
    rec = harness.run_scenario(cfg, args.seed)
    path = os.path.join(args.out, f"run_seed{args.seed}.csv")
    harness.write_records(path, [rec], {"scenario_hash": rec.scenario_hash, "seed": args.seed})
    harness.write_trace(os.path.join(args.out, f"trace_seed{args.seed}.csv"), rec)
    return {"csv": path, "objective": rec.objective, "sainr": rec.sainr, "converged": rec.converged}


def cmd_sweep(args):
    cfg = _config(args)
    values = _values(args.values)
    rows, records = harness.sweep(cfg, args.param, values, args.seeds, jobs=args.jobs)
    name = args.param.replace(".", "_")
    path = harness.write_sweep(os.path.join(args.out, f"sweep_{name}.csv"), rows, cfg, args.param,
                               args.seeds)
    flat = [r for v in values for r in records[v]]
    for r, v in zip(flat, [v for v in values for _ in records[v]]):
        r.flags["value"] = v
    per_seed = harness.write_records(os.path.join(args.out, f"sweep_{name}_runs.csv"), flat,
                                     {"scenario_hash": cfg.scenario_hash(), "seed": f"0..{args.seeds - 1}",
                                      "parameter": args.param})
    return {"csv": path, "runs_csv": per_seed, "points": len(rows)}


def cmd_baselines(args):
    cfg = _config(args)
    recs = harness.run_baselines(cfg, args.seed)
    path = os.path.join(args.out, f"baselines_seed{args.seed}.csv")
    harness.write_records(path, recs, {"scenario_hash": recs[0].scenario_hash, "seed": args.seed})
    return {"csv": path, "methods": [r.method for r in recs]}


def cmd_convergence(args):
    cfg = _config(args)
    rec = harness.convergence(cfg, args.seed)
    path = harness.write_trace(os.path.join(args.out, f"convergence_seed{args.seed}.csv"), rec)
    return {"csv": path, "iterations": rec.iterations, "converged": rec.converged}


def build_parser():
    p = argparse.ArgumentParser(prog="leonrs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="YAML scenario file (defaults when omitted)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--paper-scale", action="store_true", help="4x4 arrays, K=5, M=10 (slow)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    common(sub.add_parser("run", help="one seeded scenario"))
    sp = sub.add_parser("sweep", help="metric means and standard errors over a parameter grid")
    common(sp, seed=False)
    sp.add_argument("--param", required=True, help="dotted config path, e.g. optimizer.maximum_transmit_power_dbm")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--seeds", type=int, default=20, help="seeds per value (default 20)")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    common(sub.add_parser("baselines", help="joint design against ZFBF, UWR, LS and navigation-only"))
    common(sub.add_parser("convergence", help="per-iteration objective trace"))
    return p


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "baselines": cmd_baselines, "convergence": cmd_convergence}


def main(argv=None):
    level = os.environ.get("LEONRS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CODES["usage"] if exc.code else 0
    try:
        summary = COMMANDS[args.command](args)
    except LeonrsError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    print(json.dumps(summary, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
