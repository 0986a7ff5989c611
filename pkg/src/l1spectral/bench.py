"""Robustness benchmark: clustering accuracy against the perturbation level.

Each trial draws a block model, perturbs it with Erdos-Renyi noise, runs the
selected algorithms with the true ``k`` and scores them with the
misassignment rate under the best label matching.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cluster import SpectralConfig, indicators_to_partition, l1_spectral, spectral_clustering
from .graphmodel import BlockSpec, LaplacianKind, generate_er, generate_ideal, perturb

log = logging.getLogger(__name__)

ALGORITHMS = ("spectral", "l1spectral")
TRIALS_HEADER = ["p", "algorithm", "trial", "seed", "k", "n", "correct_fraction", "runtime_ms"]
CURVES_HEADER = ["p", "algorithm", "mean", "std", "ci_low", "ci_high", "n_trials"]

DEFAULT_P_GRID = tuple(round(0.05 * i, 2) for i in range(9))
DEFAULT_TRIALS = 100
QUICK_TRIALS = 20


def misassignment(truth, pred) -> float:
    """Fraction of nodes mislabelled under the best one-to-one label matching.

    Solved as an assignment problem on the confusion matrix; a rectangular
    confusion matrix is padded with zero-overlap dummy clusters.
    """
    truth = np.asarray(truth, dtype=np.int64).ravel()
    pred = np.asarray(pred, dtype=np.int64).ravel()
    if truth.shape != pred.shape:
        raise ValueError(f"length mismatch: {truth.size} vs {pred.size}")
    n = truth.size
    if n == 0:
        return 0.0
    _, t = np.unique(truth, return_inverse=True)
    _, q = np.unique(pred, return_inverse=True)
    size = max(t.max(), q.max()) + 1
    overlap = np.zeros((size, size), dtype=np.int64)
    np.add.at(overlap, (t, q), 1)
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    return (n - int(overlap[rows, cols].sum())) / n


@dataclass(frozen=True)
class ExperimentPlan:
    p_grid: tuple[float, ...] = DEFAULT_P_GRID
    trials: int = DEFAULT_TRIALS
    k_range: tuple[int, int] = (5, 10)
    size_range: tuple[int, int] = (10, 20)
    algorithms: tuple[str, ...] = ALGORITHMS
    base_seed: int = 0
    laplacian: LaplacianKind = LaplacianKind.UNNORMALIZED
    reps: str = "adaptive"

    def __post_init__(self):
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        object.__setattr__(self, "k_range", tuple(int(x) for x in self.k_range))
        object.__setattr__(self, "size_range", tuple(int(x) for x in self.size_range))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "laplacian", LaplacianKind.parse(self.laplacian))
        if not self.p_grid or any(not 0.0 <= p <= 1.0 for p in self.p_grid):
            raise ValueError(f"p_grid must be a nonempty list within [0, 1], got {self.p_grid}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        k_min, k_max = self.k_range
        if not 1 <= k_min <= k_max:
            raise ValueError(f"invalid k_range {self.k_range}")
        c_min, c_max = self.size_range
        if not 2 <= c_min <= c_max:
            raise ValueError(f"invalid size_range {self.size_range}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}")
        if self.reps not in ("adaptive", "greedy"):
            raise ValueError(f"reps must be 'adaptive' or 'greedy', got {self.reps!r}")


@dataclass(frozen=True)
class TrialRecord:
    p: float
    seed: int
    k: int
    sizes: tuple[int, ...]
    algorithm: str
    trial: int
    correct_fraction: float
    runtime_ms: float
    failed: bool = field(default=False, compare=False)

    @property
    def n(self) -> int:
        return sum(self.sizes)


@dataclass(frozen=True)
class CurvePoint:
    p: float
    algorithm: str
    mean_correct: float
    std_correct: float
    ci95_low: float
    ci95_high: float
    n_trials: int


def trial_seed(base_seed: int, p: float, trial: int) -> int:
    """64-bit seed for one (p, trial) cell, independent of scheduling."""
    ss = np.random.SeedSequence([int(base_seed), int(round(p * 1_000_000)), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def draw_instance(plan: ExperimentPlan, p: float, trial: int):
    """Return ``(seed, spec, adjacency, rng)`` for one trial."""
    seed = trial_seed(plan.base_seed, p, trial)
    rng = np.random.default_rng(seed)
    k = int(rng.integers(plan.k_range[0], plan.k_range[1] + 1))
    sizes = rng.integers(plan.size_range[0], plan.size_range[1] + 1, size=k)
    spec = BlockSpec.from_unsorted(sizes)
    a = perturb(generate_ideal(spec), generate_er(spec.n, p, rng))
    return seed, spec, a, rng


def _run_algorithm(name, a, k, plan, kmeans_seed):
    if name == "spectral":
        cfg = SpectralConfig(k=k, laplacian=plan.laplacian, seed=kmeans_seed)
        return spectral_clustering(a, cfg), False
    reps = "adaptive" if plan.reps == "adaptive" else None
    f = l1_spectral(a, k, reps=reps, on_failure="fallback")
    return indicators_to_partition(f), bool(f.failures)


def run_trial(plan: ExperimentPlan, p: float, trial: int) -> list[TrialRecord]:
    seed, spec, a, rng = draw_instance(plan, p, trial)
    kmeans_seed = int(rng.integers(2**63))
    truth = spec.labels()
    records = []
    for name in plan.algorithms:
        start = time.perf_counter()
        try:
            labels, failed = _run_algorithm(name, a, spec.k, plan, kmeans_seed)
        except Exception as exc:  # a failed trial is scored, never fatal
            log.warning("p=%g trial=%d %s failed: %s", p, trial, name, exc)
            labels, failed = np.zeros(spec.n, dtype=np.int64), True
        elapsed = (time.perf_counter() - start) * 1000.0
        score = 1.0 - misassignment(truth, labels)
        records.append(TrialRecord(p, seed, spec.k, spec.sizes, name, trial, score, elapsed, failed))
    return records


def _run_cell(args):
    return run_trial(*args)


def run_experiment(plan: ExperimentPlan, jobs: int | None = None) -> list[TrialRecord]:
    """Run every (p, trial) cell; output order is (p, algorithm, trial)."""
    cells = [(plan, p, t) for p in plan.p_grid for t in range(plan.trials)]
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1:
        chunks = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    records = [r for chunk in chunks for r in chunk]
    algo_rank = {name: i for i, name in enumerate(plan.algorithms)}
    p_rank = {p: i for i, p in enumerate(plan.p_grid)}
    records.sort(key=lambda r: (p_rank[r.p], algo_rank[r.algorithm], r.trial))
    return records


def aggregate(records: Iterable[TrialRecord]) -> list[CurvePoint]:
    """Mean, sample std and normal 95% interval per (p, algorithm)."""
    groups: dict[tuple[float, str], list[float]] = {}
    for r in records:
        groups.setdefault((r.p, r.algorithm), []).append(r.correct_fraction)
    if not groups:
        raise ValueError("no records to aggregate")
    points = []
    for (p, algo), values in groups.items():
        arr = np.asarray(values, dtype=float)
        mean = float(arr.mean())
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        half = 1.96 * std / math.sqrt(arr.size)
        points.append(CurvePoint(p, algo, mean, std, max(0.0, mean - half),
                                 min(1.0, mean + half), int(arr.size)))
    return points


# --- CSV I/O ------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_trials_csv(records: Sequence[TrialRecord], path: str | PathLike,
                     timing: bool = False) -> None:
    """One row per record. ``runtime_ms`` is left empty unless ``timing``,
    which keeps the file byte-reproducible for a fixed seed."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIALS_HEADER)
        for r in records:
            writer.writerow([_fmt(r.p), r.algorithm, r.trial, r.seed, r.k, r.n,
                             _fmt(r.correct_fraction), f"{r.runtime_ms:.3f}" if timing else ""])


def write_curves_csv(points: Sequence[CurvePoint], path: str | PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVES_HEADER)
        for c in points:
            writer.writerow([_fmt(c.p), c.algorithm, _fmt(c.mean_correct), _fmt(c.std_correct),
                             _fmt(c.ci95_low), _fmt(c.ci95_high), c.n_trials])


def read_curves_csv(path: str | PathLike) -> list[CurvePoint]:
    """Parse a curves CSV; raises ``ValueError`` on a bad header, bad row or no data."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CURVES_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CURVES_HEADER)}")
        points = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(CURVES_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(CURVES_HEADER)} fields")
            try:
                points.append(CurvePoint(float(row[0]), row[1], float(row[2]), float(row[3]),
                                         float(row[4]), float(row[5]), int(row[6])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not points:
        raise ValueError(f"{path}: no data rows")
    return points


# --- plan files ---------------------------------------------------------------

def parse_float_list(text: str) -> tuple[float, ...]:
    """``"0,0.1,0.2"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("range step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(float(x) for x in text.split(",") if x.strip())


def parse_int_pair(text: str) -> tuple[int, int]:
    parts = [int(x) for x in text.replace(":", ",").split(",") if x.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected two integers, got {text!r}")
    return parts[0], parts[1]


PLAN_KEYS = ("p_grid", "trials", "k_range", "size_range", "algorithms", "seed",
             "laplacian", "reps")


def plan_overrides(pairs: dict[str, str]) -> dict:
    """Convert raw ``key -> text`` settings into ExperimentPlan fields."""
    out: dict = {}
    for key, value in pairs.items():
        if key not in PLAN_KEYS:
            raise ValueError(f"unknown plan key {key!r}")
        if key == "p_grid":
            out["p_grid"] = parse_float_list(value)
        elif key == "trials":
            out["trials"] = int(value)
        elif key in ("k_range", "size_range"):
            out[key] = parse_int_pair(value)
        elif key == "algorithms":
            out["algorithms"] = tuple(a.strip() for a in value.split(",") if a.strip())
        elif key == "seed":
            out["base_seed"] = int(value)
        elif key == "laplacian":
            out["laplacian"] = LaplacianKind.parse(value)
        else:
            out["reps"] = value.strip()
    return out


def read_plan_file(path: str | PathLike) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    pairs = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            pairs[key.strip()] = value.strip()
    return pairs


def build_plan(base: ExperimentPlan | None = None, **fields) -> ExperimentPlan:
    return replace(base or ExperimentPlan(), **fields)
