"""Experiment harness: seeded repeats of each method, line-delimited
trace persistence, and regret-curve aggregation.

Seed policy: the per-repeat run seed is ``SeedSequence([master, repeat])``
collapsed to one 32-bit word, so every method sees the same run seed for
repeat ``r`` (shared initializations, paired comparisons) and adding or
removing methods never perturbs the other methods' streams.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .engine import EngineError, LoopConfig, RunTrace, run
from .oracles import (
    DatasetOracle,
    ExpertOracle,
    SimulatedOracle,
    get_objective,
    load_dataset,
)

METHODS = ("boap", "boap_oa", "boap_ia", "boap_np", "bo_ts", "bo_ei")

# method id -> (engine mode, expert mode or None)
_METHOD_TABLE = {
    "boap": ("boap", "accurate"),
    "boap_oa": ("boap_oa", "accurate"),
    "boap_ia": ("boap", "inaccurate"),
    "boap_np": ("boap", "noisy"),
    "bo_ts": ("bo_ts", None),
    "bo_ei": ("bo_ei", None),
}


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment."""

    methods: list
    objective: Optional[str] = None
    dataset_path: Optional[str] = None
    dataset_schema: Optional[str] = None
    repeats: int = 10
    seed: int = 0
    seeds: Optional[list] = None
    flip_prob: float = 0.3
    t_init: Optional[int] = None
    budget: Optional[int] = None
    grid_size: Optional[int] = None
    bounds: Optional[list] = None
    n_properties: int = 2
    hyperopt_starts: int = 8
    hyperopt_maxfev: Optional[int] = None
    output_dir: str = "results"

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if (self.objective is None) == (self.dataset_path is None):
            raise ValueError("exactly one of objective / dataset_path must be set")
        if self.dataset_path is not None and self.dataset_schema is None:
            raise ValueError("dataset_path requires dataset_schema")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        raw = yaml.safe_load(Path(path).read_text()) or {}
        return cls(**raw)

    def to_yaml(self) -> str:
        data = {k: v for k, v in asdict(self).items() if v is not None}
        return yaml.safe_dump(data, sort_keys=True)

    def run_seeds(self) -> list[int]:
        if self.seeds is not None:
            return [int(s) for s in self.seeds]
        return [derive_run_seed(self.seed, r) for r in range(self.repeats)]


def derive_run_seed(master_seed: int, repeat: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(repeat)]).generate_state(1)[0])


def build_run(config: ExperimentConfig, method: str, run_seed: int):
    """Materialize the (LoopConfig, oracle) pair for one method/seed."""
    mode, expert_mode = _METHOD_TABLE[method]
    if config.objective is not None:
        obj = get_objective(config.objective)
        bounds = (
            [tuple(b) for b in config.bounds]
            if config.bounds is not None
            else [
                (float(lo), float(hi))
                for lo, hi in zip(obj.space.lower, obj.space.upper)
            ]
        )
        uses_prefs = expert_mode is not None
        loop = LoopConfig(
            dim=obj.dim,
            bounds=tuple(bounds),
            mode=mode,
            n_properties=config.n_properties if uses_prefs else 0,
            seed=run_seed,
            t_init=config.t_init,
            budget=config.budget,
            grid_size=config.grid_size,
            hyperopt_starts=config.hyperopt_starts,
            hyperopt_maxfev=config.hyperopt_maxfev,
            observation_noise=True,
            true_max=obj.true_max_value,
        )
        expert = None
        if uses_prefs:
            fns = (
                obj.inaccurate_property_fns
                if expert_mode == "inaccurate"
                else obj.property_fns
            )
            expert = ExpertOracle(
                property_fns=fns,
                objective_fn=obj.fn,
                mode=expert_mode,
                flip_prob=config.flip_prob,
                seed=run_seed,
            )
        oracle = SimulatedOracle(
            obj.fn,
            expert,
            run_seed=run_seed,
            noise_variance=loop.noise_variance,
            observation_noise=True,
        )
        return loop, oracle

    dataset = load_dataset(config.dataset_path, config.dataset_schema)
    space = dataset.space()
    uses_prefs = expert_mode is not None
    loop = LoopConfig(
        dim=dataset.dim,
        bounds=tuple((float(lo), float(hi)) for lo, hi in zip(space.lower, space.upper)),
        mode=mode,
        n_properties=(
            min(config.n_properties, dataset.properties.shape[1]) if uses_prefs else 0
        ),
        seed=run_seed,
        t_init=config.t_init if config.t_init is not None else 4,
        budget=config.budget if config.budget is not None else 54,
        grid_size=config.grid_size,
        hyperopt_starts=config.hyperopt_starts,
        hyperopt_maxfev=config.hyperopt_maxfev,
        observation_noise=False,
        true_max=dataset.true_max(),
        property_names=tuple(dataset.schema.property_columns),
        candidates=tuple(tuple(row) for row in dataset.designs),
    )
    expert = None
    if uses_prefs:
        expert = ExpertOracle(
            property_fns=dataset.property_fns(),
            objective_fn=dataset.evaluate,
            mode=expert_mode,
            flip_prob=config.flip_prob,
            seed=run_seed,
        )
    oracle = SimulatedOracle(
        dataset.evaluate,
        expert,
        run_seed=run_seed,
        observation_noise=False,
    )
    return loop, oracle


def _execute(args):
    config, method, run_seed = args
    loop, oracle = build_run(config, method, run_seed)
    started = time.perf_counter()
    status = "ok"
    try:
        trace = run(loop, oracle)
    except EngineError as err:
        trace = err.trace
        status = "failed"
    elapsed = time.perf_counter() - started
    return method, run_seed, status, elapsed, trace.to_jsonl()


@dataclass
class RegretCurve:
    """Mean regret with its standard error across repeats."""

    method: str
    iterations: list
    mean: list
    stderr: list
    per_seed: dict

    @property
    def final_mean(self) -> float:
        return self.mean[-1]

    @property
    def final_stderr(self) -> float:
        return self.stderr[-1]


def aggregate_curve(method: str, traces: dict) -> RegretCurve:
    """Recompute the mean/SE curve from raw per-seed traces."""
    per_seed = {}
    iterations = None
    for seed, trace in traces.items():
        points = [
            (r["t"], r["regret"])
            for r in trace.records
            if r.get("type") in ("init", "step")
        ]
        per_seed[seed] = [p[1] for p in points]
        its = [p[0] for p in points]
        if iterations is None or len(its) > len(iterations):
            iterations = its
    length = len(iterations)
    rows = [series for series in per_seed.values() if len(series) == length]
    arr = np.asarray(rows, dtype=float)
    mean = arr.mean(axis=0)
    if arr.shape[0] > 1:
        stderr = arr.std(axis=0, ddof=1) / math.sqrt(arr.shape[0])
    else:
        stderr = np.zeros(length)
    return RegretCurve(
        method=method,
        iterations=list(iterations),
        mean=[float(v) for v in mean],
        stderr=[float(v) for v in stderr],
        per_seed=per_seed,
    )


def run_experiment(config: ExperimentConfig, parallelism: int = 1) -> dict:
    """Execute every (method, seed) pair and persist results.

    Layout under ``config.output_dir``:
      - ``config.yaml`` echo of the experiment description
      - ``<method>/seed_<s>.jsonl`` per-run trace (deterministic bytes)
      - ``timings.csv`` wall-clock per run (excluded from determinism)

    Returns ``{"curves": {method: RegretCurve}, "failures": [...]}``.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(config.to_yaml())
    jobs = [(config, m, s) for m in config.methods for s in config.run_seeds()]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_execute, jobs))
    else:
        results = [_execute(j) for j in jobs]

    failures = []
    timing_rows = []
    traces: dict = {m: {} for m in config.methods}
    for method, run_seed, status, elapsed, payload in results:
        mdir = out / method
        mdir.mkdir(exist_ok=True)
        suffix = "jsonl" if status == "ok" else "failed.jsonl"
        (mdir / f"seed_{run_seed}.{suffix}").write_text(payload)
        timing_rows.append([method, run_seed, f"{elapsed:.3f}", status])
        if status == "ok":
            traces[method][run_seed] = RunTrace.from_jsonl(payload)
        else:
            failures.append((method, run_seed))
    with (out / "timings.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "seed", "wall_seconds", "status"])
        writer.writerows(timing_rows)

    curves = {
        m: aggregate_curve(m, t) for m, t in traces.items() if t
    }
    return {"curves": curves, "failures": failures}


def load_results(results_dir) -> dict:
    """Read raw traces back from a results directory."""
    results_dir = Path(results_dir)
    traces: dict = {}
    for mdir in sorted(p for p in results_dir.iterdir() if p.is_dir()):
        seed_traces = {}
        for f in sorted(mdir.glob("seed_*.jsonl")):
            if f.name.endswith(".failed.jsonl"):
                continue
            seed = int(f.stem.split("_")[1])
            seed_traces[seed] = RunTrace.from_jsonl(f.read_text())
        if seed_traces:
            traces[mdir.name] = seed_traces
    return traces


def summarize(results_dir, write: bool = True) -> dict:
    """Per-method final regret (mean and SE), per-seed wins versus the
    plain Thompson-sampling baseline, and wall-clock totals; also writes
    plot-ready ``curves.csv`` and ``summary.csv``."""
    results_dir = Path(results_dir)
    traces = load_results(results_dir)
    if not traces:
        raise FileNotFoundError(f"no traces found under {results_dir}")
    curves = {m: aggregate_curve(m, t) for m, t in traces.items()}
    warnings = []
    for failed in sorted(results_dir.glob("*/seed_*.failed.jsonl")):
        warnings.append(f"failed run excluded from aggregation: {failed.relative_to(results_dir)}")

    wall: dict = {}
    timings = results_dir / "timings.csv"
    if timings.exists():
        with timings.open() as fh:
            for row in csv.DictReader(fh):
                wall[row["method"]] = wall.get(row["method"], 0.0) + float(
                    row["wall_seconds"]
                )

    baseline = curves.get("bo_ts")
    rows = []
    for method, curve in sorted(curves.items()):
        wins = losses = None
        if baseline is not None and method != "bo_ts":
            wins = losses = 0
            for seed, series in curve.per_seed.items():
                if seed in baseline.per_seed:
                    mine, theirs = series[-1], baseline.per_seed[seed][-1]
                    if mine is not None and theirs is not None:
                        wins += mine < theirs
                        losses += mine > theirs
        rows.append(
            {
                "method": method,
                "repeats": len(curve.per_seed),
                "final_regret_mean": curve.final_mean,
                "final_regret_stderr": curve.final_stderr,
                "wins_vs_bo_ts": wins,
                "losses_vs_bo_ts": losses,
                "wall_seconds": wall.get(method),
            }
        )

    if write:
        with (results_dir / "summary.csv").open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        with (results_dir / "curves.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "iteration", "regret_mean", "regret_stderr"])
            for method, curve in sorted(curves.items()):
                for t, m, s in zip(curve.iterations, curve.mean, curve.stderr):
                    writer.writerow([method, t, repr(m), repr(s)])
    return {"rows": rows, "curves": curves, "warnings": warnings}
