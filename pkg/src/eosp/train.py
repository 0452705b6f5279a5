"""Full-batch training with the fairness-regularized objective and Adam."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Tape
from .graph import ConfigurationError, Dataset, Splits
from .losses import FairnessConfig, GroupIndexSets, eo_loss, pred_loss, sp_loss
from .metrics import MetricsReport, metrics_report
from .models import GraphModel, ModelParams, predict_labels


class DivergenceError(FloatingPointError):
    pass


@dataclass(frozen=True)
class AdamHyper:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(params: dict, grads: dict, state: AdamState, lr: float, hyper: AdamHyper = AdamHyper()):
    """One bias-corrected Adam update; returns ``(new_params, state)``.

    Weight decay, when set, is added to the gradient (L2 form).
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {name}")
    state.t += 1
    b1, b2 = hyper.beta1, hyper.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    new = {}
    for name, theta in params.items():
        g = grads[name]
        if hyper.weight_decay:
            g = g + hyper.weight_decay * theta
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m, v = np.zeros_like(theta), np.zeros_like(theta)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        state.m[name], state.v[name] = m, v
        new[name] = theta - lr * (m / bc1) / (np.sqrt(v / bc2) + hyper.eps)
    return new, state


@dataclass
class TrainConfig:
    epochs: int = 100
    lr: float = 1e-2
    adam: AdamHyper = field(default_factory=AdamHyper)
    seed: int = 0
    fairness: FairnessConfig = field(default_factory=FairnessConfig)
    threshold: float = 0.5
    self_loops: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if not self.lr > 0:
            raise ConfigurationError("lr must be positive")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError("threshold must lie in (0, 1)")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    total_loss: float
    pred_loss: float
    sp_loss: float
    eo_loss: float
    val: MetricsReport
    hybrid: float

    def to_json(self) -> dict:
        d = asdict(self)
        d["val"] = self.val.to_json()
        return d


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_params: ModelParams | None = None
    wall_time: float = 0.0

    @property
    def best_score(self) -> float:
        return self.records[self.best_epoch].hybrid

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_json(), sort_keys=True) for r in self.records]
        lines.append(json.dumps({"best_epoch": self.best_epoch}))
        return "\n".join(lines) + "\n"


class TrainedModel(GraphModel):
    def predict_labels(self, X, threshold: float = 0.5) -> np.ndarray:
        return predict_labels(self.predict_proba(X), threshold)


def select_best_epoch(scores) -> int:
    """Index of the highest score; the earliest epoch wins ties."""
    return int(np.argmax(np.asarray(scores, dtype=np.float64)))


def evaluate(model: GraphModel, dataset: Dataset, idx, threshold: float = 0.5) -> MetricsReport:
    P = model.predict_proba(dataset.X)
    return metrics_report(P, predict_labels(P, threshold), dataset.Y, dataset.S, idx)


def train(
    dataset: Dataset, splits: Splits, init: ModelParams, config: TrainConfig
) -> tuple[TrainedModel, TrainHistory]:
    """Run ``config.epochs`` full-batch steps and restore the best-validation parameters.

    Each step minimizes cross-entropy on the training nodes plus
    ``alpha * L_EO + beta * L_SP`` over the same nodes. After every step the
    model is evaluated on the validation split (no dropout) and snapshotted
    whenever the hybrid score strictly improves.
    """
    start = time.perf_counter()
    train_idx = np.asarray(splits.train, dtype=np.int64)
    groups = GroupIndexSets.from_labels(dataset.Y, dataset.S, train_idx)
    model = TrainedModel(init.copy(), dataset.A, self_loops=config.self_loops)
    fair = config.fairness
    rng = np.random.default_rng(config.seed)
    arrays = {k: v.copy() for k, v in init.arrays.items()}
    state = AdamState()
    history = TrainHistory()
    best_score = -np.inf
    for epoch in range(config.epochs):
        tape = Tape()
        P, _ = model.forward(tape, dataset.X, rng=rng, arrays=arrays)
        base = pred_loss(tape, P, dataset.Y, train_idx)
        eo = eo_loss(tape, P, groups, fair.empty_group_policy)
        sp = sp_loss(tape, P, groups, fair.empty_group_policy)
        total = tape.add(base, tape.add(tape.scale(eo, fair.alpha), tape.scale(sp, fair.beta)))
        if not np.isfinite(total.value):
            raise DivergenceError(f"non-finite loss at epoch {epoch}")
        grads = tape.backward(total)
        try:
            arrays, state = adam_step(arrays, grads, state, config.lr, config.adam)
        except DivergenceError as exc:
            raise DivergenceError(f"epoch {epoch}: {exc}") from None

        Pv = model.predict_proba(dataset.X, arrays=arrays)
        report = metrics_report(Pv, predict_labels(Pv, config.threshold), dataset.Y, dataset.S, splits.val)
        score = report.hybrid()
        history.records.append(
            EpochRecord(epoch, total.item(), base.item(), sp.item(), eo.item(), report, score)
        )
        if score > best_score:
            best_score = score
            history.best_epoch = epoch
            history.best_params = init.copy(arrays)
    model.params = history.best_params
    history.wall_time = time.perf_counter() - start
    return model, history
