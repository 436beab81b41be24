"""Node-count sweeps comparing the greedy and exhaustive planners."""

from __future__ import annotations

import csv
import logging
import math
import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import to_minutes
from .planner import (
    BudgetExceededError,
    NoPathError,
    World,
    ncg_ci_plan,
    ncg_pb_plan,
    planning_order,
    realized_arrivals,
)
from .scenario import ScenarioConfig, scenario_from_config
from .sim import simulate

log = logging.getLogger(__name__)

RUN_FIELDS = ["node_count", "run", "seed", "player", "planner", "wall_ms",
              "delivery_min", "feasible", "status", "hops"]
AGG_FIELDS = ["node_count", "planner", "records", "feasible", "excluded",
              "wall_ms_mean", "wall_ms_median", "wall_ms_std",
              "delivery_mean", "delivery_median", "delivery_std"]
PLANNERS = ("NCG-PB", "NCG-CI")


@dataclass(frozen=True)
class RunRecord:
    node_count: int
    run: int
    seed: int
    player: int
    planner: str
    wall_ms: float
    delivery_min: Optional[float]
    feasible: bool
    status: str
    hops: int = 0


@dataclass
class ExperimentResult:
    records: List[RunRecord] = field(default_factory=list)
    violations: List[Tuple[int, int, int, float, float]] = field(default_factory=list)

    def aggregates(self) -> List[dict]:
        rows = []
        keys = sorted({(r.node_count, r.planner) for r in self.records},
                      key=lambda k: (k[0], PLANNERS.index(k[1])))
        for n, planner in keys:
            recs = [r for r in self.records if r.node_count == n and r.planner == planner]
            walls = [r.wall_ms for r in recs]
            times = [r.delivery_min for r in recs if r.feasible]
            rows.append({
                "node_count": n,
                "planner": planner,
                "records": len(recs),
                "feasible": len(times),
                "excluded": len(recs) - len(times),
                "wall_ms_mean": statistics.fmean(walls),
                "wall_ms_median": statistics.median(walls),
                "wall_ms_std": statistics.pstdev(walls),
                "delivery_mean": statistics.fmean(times) if times else math.nan,
                "delivery_median": statistics.median(times) if times else math.nan,
                "delivery_std": statistics.pstdev(times) if times else math.nan,
            })
        return rows

    def paired(self, node_count: Optional[int] = None):
        """(greedy, exhaustive) delivery minutes for players both planners served."""
        by_key: Dict[tuple, Dict[str, RunRecord]] = {}
        for r in self.records:
            if node_count is None or r.node_count == node_count:
                by_key.setdefault((r.node_count, r.run, r.player), {})[r.planner] = r
        out = []
        for key in sorted(by_key):
            pair = by_key[key]
            pb, ci = pair.get("NCG-PB"), pair.get("NCG-CI")
            if pb and ci and pb.feasible and ci.feasible:
                out.append((pb.delivery_min, ci.delivery_min))
        return out


def runs_for(node_count: int, runs_fraction: float) -> int:
    if not 0 < runs_fraction <= 100:
        raise ValueError("runs_fraction must lie in (0, 100]")
    return math.ceil(node_count * runs_fraction / 100.0)


def run_seed(master: int, node_count: int, run: int) -> int:
    return int(np.random.SeedSequence([master, node_count, run]).generate_state(1)[0])


def _timed(fn, *args):
    t0 = time.perf_counter()
    try:
        return fn(*args), "ok", (time.perf_counter() - t0) * 1e3
    except NoPathError:
        return None, "no_path", (time.perf_counter() - t0) * 1e3
    except BudgetExceededError:
        return None, "budget", (time.perf_counter() - t0) * 1e3


def run_scenario(config: ScenarioConfig, run: int = 0) -> Tuple[List[RunRecord], list]:
    """Both planners on one generated scenario.

    Drones plan greedily in release order. For each drone the exhaustive
    planner sees exactly the plans the greedy drone saw, and both plans are
    then executed, without jitter, on top of those earlier plans.
    """
    scen = scenario_from_config(config)
    world = scen.world()
    tpm = world.config.ticks_per_minute
    records, violations = [], []
    for pid in planning_order(world):
        prefix = dict(world.plans)
        pb, pb_status, pb_ms = _timed(ncg_pb_plan, world, pid)

        ci_world = World(world.network, world.drones, world.config, plans=dict(prefix))
        ci_world.true_arrivals = realized_arrivals(ci_world)
        ci, ci_status, ci_ms = _timed(ncg_ci_plan, ci_world, pid)

        delivered = {}
        for name, plan in (("NCG-PB", pb), ("NCG-CI", ci)):
            if plan is None:
                continue
            trace = simulate(world, {**prefix, pid: plan})
            delivered[name] = to_minutes(trace.delivery_time[pid], tpm)
        for name, plan, status, ms in (("NCG-PB", pb, pb_status, pb_ms),
                                       ("NCG-CI", ci, ci_status, ci_ms)):
            records.append(RunRecord(config.node_count, run, config.seed, pid, name, ms,
                                     delivered.get(name), plan is not None, status,
                                     plan.stops if plan else 0))
        if pb is not None and ci is not None and delivered["NCG-PB"] < delivered["NCG-CI"]:
            violations.append((config.node_count, run, pid, delivered["NCG-PB"], delivered["NCG-CI"]))
            log.warning("dominance violated: N=%d run=%d drone=%d greedy %.2f < exhaustive %.2f",
                        *violations[-1])
    return records, violations


def run_sweep(node_counts: Sequence[int], runs_fraction: float, base: ScenarioConfig,
              master_seed: int = 0, runs: Optional[int] = None) -> ExperimentResult:
    """ceil(N * fraction / 100) fresh scenarios per node count (or ``runs`` if given)."""
    result = ExperimentResult()
    for n in node_counts:
        count = runs if runs is not None else runs_for(n, runs_fraction)
        for k in range(count):
            cfg = replace(base, node_count=n, seed=run_seed(master_seed, n, k))
            recs, bad = run_scenario(cfg, k)
            result.records.extend(recs)
            result.violations.extend(bad)
        log.info("N=%d: %d runs done", n, count)
    return result


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6f}"
    return v


def emit_metrics(result: ExperimentResult, out_dir) -> Tuple[Path, Path]:
    """Write ``runs.csv`` and ``aggregates.csv`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        runs_path, agg_path = out / "runs.csv", out / "aggregates.csv"
        with runs_path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RUN_FIELDS)
            for r in result.records:
                w.writerow([_fmt(getattr(r, f)) for f in RUN_FIELDS])
        with agg_path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=AGG_FIELDS)
            w.writeheader()
            for row in result.aggregates():
                w.writerow({k: _fmt(v) for k, v in row.items()})
    except OSError as exc:
        raise OSError(f"cannot write metrics to {out}: {exc}") from exc
    return runs_path, agg_path
