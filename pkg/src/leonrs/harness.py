"""Seeded experiment runs, baselines, sweeps and CSV persistence.

Every CSV starts with ``#``-prefixed header rows carrying the schema
version, the scenario hash and the seed(s), followed by a column header and
data rows. Numbers are written in full-precision scientific notation.
"""

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig, with_override
from .errors import LeonrsError
from .optimizer.algorithm import OptimizerSettings, run_algorithm1
from .optimizer.baselines import (baseline_ls, baseline_navigation_only, baseline_uwr, baseline_zfbf,
                                  position_rmse)
from .scenario import build_scene

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"


@dataclass
class RunRecord:
    seed: int
    scenario_hash: str
    method: str
    objective: float  # mean weighted PVT error over UEs
    position: list  # E^P per UE
    timing: list  # E^T per UE
    velocity: list  # E^V per UE
    sainr: float  # linear, MVDR reception
    sainr_uwr: float
    powers: list  # W per satellite
    trace: list = field(default_factory=lambda: [1.0])
    objective_trace: list = field(default_factory=lambda: [1.0])
    residual_trace: list = field(default_factory=list)  # W
    iterations: int = 0
    converged: bool = True
    rank_residual: float = 0.0
    wall_time: float = 0.0
    flags: dict = field(default_factory=dict)

    def check(self):
        """Trace non-empty and all recorded values finite."""
        vals = [self.objective, self.sainr, self.sainr_uwr, *self.position, *self.timing,
                *self.velocity, *self.powers, *self.trace]
        return len(self.trace) >= 1 and bool(np.all(np.isfinite(vals)))


def record_from_solution(sol, scene, seed):
    return RunRecord(
        seed=int(seed), scenario_hash=scene.scenario_hash, method=sol.method,
        objective=float(sol.objective),
        position=[float(e.position) for e in sol.errors],
        timing=[float(e.timing) for e in sol.errors],
        velocity=[float(e.velocity) for e in sol.errors],
        sainr=float(sol.sainr), sainr_uwr=float(sol.sainr_uwr),
        powers=[float(p) for p in sol.powers],
        trace=[float(x) for x in (sol.trace or [1.0])],
        objective_trace=[float(x) for x in (sol.objective_trace or [1.0])],
        residual_trace=[float(x) for x in sol.flags.get("residual_trace", [])],
        iterations=int(sol.iterations), converged=bool(sol.converged),
        rank_residual=float(sol.rank_residual), wall_time=float(sol.wall_time),
        flags={k: v for k, v in sol.flags.items() if k != "residual_trace"})


def run_scenario(cfg: ScenarioConfig, seed):
    """Build the seeded scene, run the joint design and record its metrics."""
    scene = build_scene(cfg, seed)
    sol = run_algorithm1(scene, OptimizerSettings.from_config(cfg))
    return record_from_solution(sol, scene, seed)


def run_baselines(cfg: ScenarioConfig, seed):
    """Joint design plus ZFBF, UWR, LS-weighting and navigation-only on one scene.

    UWR and LS reuse the joint design's beams: UWR swaps the MVDR receiver
    for uniform weights, LS evaluates the bound with equal observation
    weights. Their rows also carry Monte Carlo position RMSEs.
    """
    scene = build_scene(cfg, seed)
    st = OptimizerSettings.from_config(cfg)
    alg = run_algorithm1(scene, st)
    out = [record_from_solution(alg, scene, seed)]
    zf = baseline_zfbf(scene, st.share_max)
    out.append(record_from_solution(zf, scene, seed))

    uwr = record_from_solution(alg, scene, seed)
    uwr.method = "uwr"
    uwr.sainr = baseline_uwr(scene, alg.w, alg.v)
    out.append(uwr)

    ls = baseline_ls(scene, alg.w, alg.v)
    ls.trace, ls.objective_trace, ls.iterations = alg.trace, alg.objective_trace, alg.iterations
    ls_rec = record_from_solution(ls, scene, seed)
    sigma0 = cfg.navigation.pseudorange_sigma_m
    ls_rec.flags["rmse_ls"] = position_rmse(scene, 200, sigma0, weighted=False)[0]
    ls_rec.flags["rmse_wls"] = position_rmse(scene, 200, sigma0, weighted=True)[0]
    out.append(ls_rec)

    nav = baseline_navigation_only(scene, st)
    out.append(record_from_solution(nav, scene, seed))
    return out


def convergence(cfg: ScenarioConfig, seed):
    """Alias of :func:`run_scenario`; the record's trace is the payload."""
    return run_scenario(cfg, seed)


def _sweep_point(args):
    cfg, path, value, seed = args
    c = with_override(cfg, path, value)
    try:
        return value, run_scenario(c, seed), None
    except LeonrsError as exc:
        return value, None, f"{exc.category}: {exc}"


def _stats(x):
    x = np.asarray(x, float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return np.nan, np.nan
    se = x.std(ddof=1) / np.sqrt(x.size) if x.size > 1 else 0.0
    return float(x.mean()), float(se)


def sweep(cfg: ScenarioConfig, path, values, seeds=20, jobs=1):
    """Mean and standard error of the metrics over ``seeds`` seeds per value.

    Returns ``(summary_rows, records)``; ``records`` maps each value to its
    per-seed RunRecords (failed seeds are logged and skipped).
    """
    seeds = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    tasks = [(cfg, path, v, s) for v in values for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    records = {v: [] for v in values}
    failures = {v: 0 for v in values}
    for v, rec, err in results:
        if rec is None:
            failures[v] += 1
            log.warning("sweep %s=%s failed: %s", path, v, err)
        else:
            records[v].append(rec)
    rows = []
    for v in values:
        recs = records[v]
        row = {"value": v, "n": len(recs), "failed": failures[v]}
        for name, get in (("objective", lambda r: r.objective),
                          ("position", lambda r: np.mean(r.position)),
                          ("timing", lambda r: np.mean(r.timing)),
                          ("velocity", lambda r: np.mean(r.velocity)),
                          ("sainr", lambda r: r.sainr),
                          ("sainr_uwr", lambda r: r.sainr_uwr),
                          ("iterations", lambda r: r.iterations)):
            row[f"{name}_mean"], row[f"{name}_se"] = _stats([get(r) for r in recs])
        row["converged_fraction"] = float(np.mean([r.converged for r in recs])) if recs else np.nan
        rows.append(row)
    return rows, records


# --------------------------------------------------------------------------
# CSV


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17e")
    return str(x)


def write_csv(path, meta, columns, rows):
    """Header rows ``# key=value`` (schema version first), then the table."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        for k, v in meta.items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r[c]) for c in columns])
    return path


def read_csv(path):
    """(meta dict, list of row dicts with float-converted numeric cells)."""
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    rows = []
    for r in csv.DictReader(lines):
        out = {}
        for k, v in r.items():
            try:
                out[k] = float(v)
            except ValueError:
                out[k] = v
        rows.append(out)
    return meta, rows


RECORD_COLUMNS = ["method", "seed", "scenario_hash", "objective", "sainr", "sainr_uwr", "iterations",
                  "converged", "rank_residual", "wall_time"]


def _record_rows(records):
    rows = []
    for r in records:
        row = {c: getattr(r, c) for c in RECORD_COLUMNS}
        for m, (p, t, v) in enumerate(zip(r.position, r.timing, r.velocity)):
            row[f"position_ue{m}"], row[f"timing_ue{m}"], row[f"velocity_ue{m}"] = p, t, v
        for k, pw in enumerate(r.powers):
            row[f"power_sat{k}"] = pw
        rows.append(row)
    return rows


def _columns(rows):
    cols = list(RECORD_COLUMNS)
    for r in rows:
        cols += [k for k in r if k not in cols]
    return cols


def write_records(path, records, meta):
    rows = _record_rows(records)
    for r, rec in zip(rows, records):
        for k in ("rmse_ls", "rmse_wls"):
            r[k] = rec.flags.get(k, np.nan)
    cols = _columns(rows)
    for r in rows:
        for c in cols:
            r.setdefault(c, np.nan)
    return write_csv(path, meta, cols, rows)


def write_trace(path, record: RunRecord):
    n = len(record.trace)
    res = record.residual_trace or [np.nan] * n
    rows = [{"iteration": i, "merit": record.trace[i], "objective": record.objective_trace[i],
             "rank_residual": res[i] if i < len(res) else np.nan} for i in range(n)]
    meta = {"scenario_hash": record.scenario_hash, "seed": record.seed,
            "converged": str(record.converged).lower(), "merit": "normalised by the initial objective"}
    return write_csv(path, meta, ["iteration", "merit", "objective", "rank_residual"], rows)


def write_sweep(path, rows, cfg, param, seeds):
    seeds = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    meta = {"scenario_hash": cfg.scenario_hash(), "seed": f"{seeds[0]}..{seeds[-1]}" if seeds else "",
            "parameter": param}
    cols = list(rows[0].keys()) if rows else ["value"]
    return write_csv(path, meta, cols, rows)

