"""Sequential model-based search over the discrete (alpha, beta) grid.

After a seeded random bootstrap, each suggestion maximizes the ratio of two
kernel density estimates over log-scaled coordinates: one fitted to the
better half of past trials, one to the worse half.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

DEFAULT_GRID = tuple(
    [round(0.01 * k, 2) for k in range(1, 11)] + [round(0.1 * k, 1) for k in range(2, 11)] + [2.0, 5.0]
)
BANDWIDTH = 0.25  # kernel width in decades
DENSITY_FLOOR = 1e-3


class SearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    grid: tuple[float, ...] = DEFAULT_GRID
    trials: int = 15
    seed: int = 0

    def __post_init__(self):
        g = tuple(float(v) for v in self.grid)
        if any(v <= 0 for v in g) or list(g) != sorted(set(g)):
            raise ValueError("grid values must be positive, distinct and sorted")
        object.__setattr__(self, "grid", g)
        if not 1 <= self.trials <= len(g) ** 2:
            raise ValueError(f"trials must lie in [1, {len(g) ** 2}]")

    def points(self) -> list[tuple[float, float]]:
        return [(a, b) for a in self.grid for b in self.grid]

    @property
    def bootstrap(self) -> int:
        return max(4, self.trials // 4)


@dataclass
class TrialRecord:
    index: int
    alpha: float
    beta: float
    score: float | None
    metrics: dict = field(default_factory=dict)
    wall_time: float = 0.0
    failed: bool = False
    error: str | None = None

    def to_json(self, with_time: bool = False) -> dict:
        """Plain dict; wall time is omitted unless asked for so logs stay reproducible."""
        d = asdict(self)
        if not with_time:
            d.pop("wall_time")
        return d


def _log_coords(points) -> np.ndarray:
    return np.log10(np.asarray(points, dtype=np.float64).reshape(-1, 2))


def _kde(at: np.ndarray, centers: np.ndarray) -> np.ndarray:
    if centers.size == 0:
        return np.zeros(len(at))
    d2 = ((at[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
    return np.exp(-0.5 * d2 / BANDWIDTH**2).mean(axis=1)


def suggest_next(history: list[TrialRecord], space: SearchSpace, rng: np.random.Generator, pending=()):
    """Next unvisited grid point (``pending`` points count as visited)."""
    visited = {(r.alpha, r.beta) for r in history} | set(pending)
    candidates = [p for p in space.points() if p not in visited]
    if not candidates:
        raise SearchError("every grid point has been evaluated")
    if len(candidates) == 1:
        return candidates[0]
    done = len(history) + len(pending)
    if done < space.bootstrap or len(history) < 2:
        return candidates[int(rng.integers(len(candidates)))]
    scores = np.array([-np.inf if r.failed or r.score is None else r.score for r in history])
    order = np.argsort(-scores, kind="stable")
    n_good = math.ceil(len(history) / 2)
    good = _log_coords([(history[i].alpha, history[i].beta) for i in order[:n_good]])
    bad = _log_coords([(history[i].alpha, history[i].beta) for i in order[n_good:]])
    at = _log_coords(candidates)
    ratio = (_kde(at, good) + DENSITY_FLOOR) / (_kde(at, bad) + DENSITY_FLOOR)
    best = np.flatnonzero(ratio >= ratio.max() * (1 - 1e-12))
    return candidates[int(best[rng.integers(best.size)])]


def _run_trial(objective, index, alpha, beta) -> TrialRecord:
    start = time.perf_counter()
    try:
        result = objective(alpha, beta)
    except Exception as exc:  # a failed trial is recorded, not fatal
        return TrialRecord(index, alpha, beta, None, wall_time=time.perf_counter() - start, failed=True, error=repr(exc))
    if isinstance(result, TrialRecord):
        score, metrics = result.score, result.metrics
    elif isinstance(result, tuple):
        score, metrics = result
    else:
        score, metrics = result, {}
    failed = score is None or not np.isfinite(score)
    return TrialRecord(
        index, alpha, beta, None if failed else float(score), dict(metrics), time.perf_counter() - start, failed
    )


def search(
    space: SearchSpace,
    objective: Callable,
    batch_size: int = 1,
    executor: Executor | None = None,
) -> tuple[tuple[float, float], list[TrialRecord]]:
    """Evaluate ``space.trials`` distinct grid points; return the best pair and all trials.

    ``objective(alpha, beta)`` returns a score, ``(score, metrics)`` or a
    ``TrialRecord``.  Suggestions are drawn in batches of ``batch_size``; a
    batch is evaluated on ``executor`` when given, and merged in trial order.
    """
    rng = np.random.default_rng(space.seed)
    history: list[TrialRecord] = []
    while len(history) < space.trials:
        k = min(batch_size, space.trials - len(history))
        batch = []
        for _ in range(k):
            batch.append(suggest_next(history, space, rng, pending=batch))
        start = len(history)
        if executor is None or k == 1:
            records = [_run_trial(objective, start + i, a, b) for i, (a, b) in enumerate(batch)]
        else:
            futures = [executor.submit(_run_trial, objective, start + i, a, b) for i, (a, b) in enumerate(batch)]
            records = [f.result() for f in futures]
        history.extend(sorted(records, key=lambda r: r.index))
    ok = [r for r in history if not r.failed]
    if not ok:
        raise SearchError("all trials failed")
    best = max(ok, key=lambda r: (r.score, -r.alpha, -r.beta))
    return (best.alpha, best.beta), history


def best_so_far(history: list[TrialRecord]) -> list[float | None]:
    """Running maximum of the score, one entry per trial."""
    out, best = [], None
    for r in history:
        if not r.failed and (best is None or r.score > best):
            best = r.score
        out.append(best)
    return out


def write_trial_log(history: list[TrialRecord], path) -> None:
    with open(path, "w") as fh:
        for r in history:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")
