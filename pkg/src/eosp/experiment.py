"""Multi-seed orchestration shared by the CLI and the scripts."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import ExperimentResult
from .graph import Dataset, Splits, make_splits
from .losses import FairnessConfig
from .metrics import MetricsReport
from .models import ModelParams, init_params
from .train import AdamHyper, TrainConfig, TrainHistory, evaluate, train


@dataclass(frozen=True)
class RunSpec:
    model: str = "gcn"
    hidden: int = 16
    layers: int = 2
    dropout: float = 0.2
    epochs: int = 100
    lr: float = 1e-2
    weight_decay: float = 0.0
    labeled_count: int = 100
    self_loops: bool = True
    threshold: float = 0.5

    def train_config(self, seed: int, alpha: float, beta: float) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            lr=self.lr,
            adam=AdamHyper(weight_decay=self.weight_decay),
            seed=seed,
            fairness=FairnessConfig(alpha, beta),
            threshold=self.threshold,
            self_loops=self.self_loops,
        )

    def init(self, in_dim: int, seed: int) -> ModelParams:
        return init_params(in_dim, self.hidden, self.layers, self.dropout, self.model, seed)


@dataclass
class SeedRun:
    seed: int
    splits: Splits
    test: MetricsReport
    history: TrainHistory
    wall_time: float = field(default=0.0)


def run_seed(dataset: Dataset, seed: int, spec: RunSpec, alpha: float, beta: float, splits: Splits | None = None) -> SeedRun:
    """Split with ``seed``, train from a ``seed``-initialized model, evaluate on test."""
    splits = make_splits(dataset, spec.labeled_count, seed) if splits is None else splits
    start = time.perf_counter()
    model, history = train(dataset, splits, spec.init(dataset.d, seed), spec.train_config(seed, alpha, beta))
    elapsed = time.perf_counter() - start
    report = evaluate(model, dataset, splits.test, spec.threshold)
    return SeedRun(seed, splits, report, history, elapsed)


def _run_seed_star(args):
    return run_seed(*args)


def run_seeds(dataset, seeds, spec: RunSpec, alpha: float, beta: float, jobs: int = 1) -> list[SeedRun]:
    tasks = [(dataset, s, spec, alpha, beta) for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            runs = list(ex.map(_run_seed_star, tasks))
    else:
        runs = [_run_seed_star(t) for t in tasks]
    return sorted(runs, key=lambda r: r.seed)


def method_name(spec: RunSpec, alpha: float, beta: float) -> str:
    base = spec.model.upper()
    return f"{base}-EOSP" if alpha > 0 or beta > 0 else base


def aggregate(name: str, runs: list[SeedRun]) -> ExperimentResult:
    return ExperimentResult(name, [r.test for r in runs])


class ValidationObjective:
    """(alpha, beta) -> best validation hybrid score of one training run on fixed splits."""

    def __init__(self, dataset: Dataset, splits: Splits, spec: RunSpec, seed: int):
        self.dataset, self.splits, self.spec, self.seed = dataset, splits, spec, seed

    def __call__(self, alpha: float, beta: float):
        _, history = train(
            self.dataset,
            self.splits,
            self.spec.init(self.dataset.d, self.seed),
            self.spec.train_config(self.seed, alpha, beta),
        )
        best = history.records[history.best_epoch]
        return best.hybrid, best.val.to_json()


def sweep_labeled(
    dataset: Dataset, proportions, seeds, spec: RunSpec, alpha: float, beta: float, jobs: int = 1
) -> list[dict]:
    """Baseline and fairness-regularized runs at each labeled proportion (percent of n)."""
    rows = []
    for prop in proportions:
        count = int(round(prop / 100.0 * dataset.n))
        sub = RunSpec(**{**spec.__dict__, "labeled_count": count})
        for a, b in ((0.0, 0.0), (alpha, beta)):
            runs = run_seeds(dataset, seeds, sub, a, b, jobs)
            res = aggregate(method_name(spec, a, b), runs)
            rows.append(
                {
                    "proportion": prop,
                    "labeled_count": count,
                    "result": res,
                    "wall_times": [r.wall_time for r in runs],
                }
            )
    return rows


def median_report(runs: list[SeedRun], column: str) -> float:
    vals = [getattr(r.test, column) for r in runs if getattr(r.test, column) is not None]
    return float(np.median(vals)) if vals else float("nan")
