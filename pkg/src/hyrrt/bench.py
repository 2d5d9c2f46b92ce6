"""Seeded benchmark runs and their summaries."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .io import LoadedProblem, export_plan
from .planner import hyrrt
from .validation import check_motion_plan

TRIAL_COLUMNS = ("seed", "success", "iterations", "vertices", "plan_valid", "plan_file")


@dataclass
class TrialRecord:
    seed: int
    success: bool
    iterations: int
    vertices: int
    wall_time: float
    plan_file: Optional[str] = None
    plan_valid: Optional[bool] = None


@dataclass
class BenchSummary:
    """Success rate, plus means taken over successful trials only."""

    n_trials: int
    success_rate: float
    mean_iterations: Optional[float]
    mean_vertices: Optional[float]
    mean_time: Optional[float]
    mode: str = ""
    problem: str = ""

    @classmethod
    def from_records(cls, records: list[TrialRecord], mode: str = "", problem: str = "") -> BenchSummary:
        if not records:
            raise ValueError("no trials to summarise")
        ok = [r for r in records if r.success]

        def mean(attr):
            return float(np.mean([getattr(r, attr) for r in ok])) if ok else None

        return cls(
            n_trials=len(records),
            success_rate=len(ok) / len(records),
            mean_iterations=mean("iterations"),
            mean_vertices=mean("vertices"),
            mean_time=mean("wall_time"),
            mode=mode,
            problem=problem,
        )


def plan_tolerance(step: float) -> float:
    """Validation tolerance for plans built from an integrator with step ``step``."""
    return 10.0 * step


def run_bench(
    loaded: LoadedProblem,
    n_trials: int,
    base_seed: int = 0,
    out_dir: Optional[Path] = None,
    mode: Optional[str] = None,
    check: bool = True,
) -> tuple[BenchSummary, list[TrialRecord]]:
    """Run ``n_trials`` planner instances with seeds ``base_seed, base_seed + 1, ...``.

    With ``out_dir`` set, writes ``summary.json``, ``trials.csv``,
    ``timings.csv`` and ``plans/seed_<k>.json``. Wall times live only in
    ``timings.csv`` and ``summary.json`` so that ``trials.csv`` is
    reproducible byte for byte. Trials run sequentially in seed order.
    """
    if n_trials < 1:
        raise ValueError("need at least one trial")
    cfg0 = loaded.config if mode is None else replace(loaded.config, mode=mode)
    out_dir = None if out_dir is None else Path(out_dir)
    tol = plan_tolerance(cfg0.scheme.step)
    records = []
    for k in range(n_trials):
        seed = base_seed + k
        res = hyrrt(loaded.problem, loaded.library, replace(cfg0, seed=seed))
        # rounded as reported, so summary means can be recomputed from timings.csv
        rec = TrialRecord(seed, res.success, res.stats.iterations, res.stats.vertices, round(res.stats.wall_time, 3))
        if res.success:
            if check:
                rec.plan_valid = check_motion_plan(loaded.problem, res.plan, cfg0.eps, tol).passed
            if out_dir is not None:
                rel = f"plans/seed_{seed}.json"
                export_plan(res.plan, out_dir / rel)
                rec.plan_file = rel
        records.append(rec)
    summary = BenchSummary.from_records(records, cfg0.mode, loaded.problem.name)
    if out_dir is not None:
        write_outputs(out_dir, summary, records)
    return summary, records


def write_outputs(out_dir: Path, summary: BenchSummary, records: list[TrialRecord]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for r in records:
            valid = "" if r.plan_valid is None else int(r.plan_valid)
            w.writerow([r.seed, int(r.success), r.iterations, r.vertices, valid, r.plan_file or ""])
    with open(out_dir / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "wall_time"])
        for r in records:
            w.writerow([r.seed, f"{r.wall_time:.3f}"])
    (out_dir / "summary.json").write_text(json.dumps(asdict(summary), indent=2) + "\n")


def read_trials(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
