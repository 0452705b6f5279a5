"""Discrete evaluation metrics, all reported as percentages.

A metric whose denominator is structurally empty (a missing group or class)
is returned as ``None`` rather than 0 so that seed aggregation can skip it.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

COLUMNS = ("bacc", "auc", "f1", "delta_sp", "delta_eo")
COLUMN_TITLES = ("BACC", "AUC", "F1", "ΔSP", "ΔEO")


def _take(v, idx):
    v = np.asarray(v).reshape(-1)
    return v if idx is None else v[np.asarray(idx, dtype=np.int64)]


def _rate(mask: np.ndarray) -> float | None:
    return float(mask.mean()) if mask.size else None


def delta_sp(y_hat, S, idx=None) -> float | None:
    y_hat, s = _take(y_hat, idx), _take(S, idx)
    r1, r0 = _rate(y_hat[s == 1] == 1), _rate(y_hat[s == 0] == 1)
    if r1 is None or r0 is None:
        return None
    return 100.0 * abs(r1 - r0)


def delta_eo(y_hat, Y, S, idx=None) -> float | None:
    y_hat, y, s = _take(y_hat, idx), _take(Y, idx), _take(S, idx)
    r1 = _rate(y_hat[(s == 1) & (y == 1)] == 1)
    r0 = _rate(y_hat[(s == 0) & (y == 1)] == 1)
    if r1 is None or r0 is None:
        return None
    return 100.0 * abs(r1 - r0)


def bacc(y_hat, Y, idx=None) -> float | None:
    y_hat, y = _take(y_hat, idx), _take(Y, idx)
    tpr, tnr = _rate(y_hat[y == 1] == 1), _rate(y_hat[y == 0] == 0)
    if tpr is None or tnr is None:
        return None
    return 100.0 * (tpr + tnr) / 2.0


def auc(P, Y, idx=None) -> float | None:
    """Mann-Whitney AUC: P(score_pos > score_neg) with ties counted one half."""
    p, y = _take(P, idx).astype(np.float64), _take(Y, idx)
    n_pos, n_neg = int((y == 1).sum()), int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    keep = (y == 0) | (y == 1)
    p, y = p[keep], y[keep]
    # doubled midranks are integers, so the U statistic is computed exactly
    ranks2 = np.rint(2.0 * rankdata(p)).astype(np.int64)
    u2 = int(ranks2[y == 1].sum()) - n_pos * (n_pos + 1)
    return 100.0 * u2 / (2.0 * n_pos * n_neg)


def f1(y_hat, Y, idx=None) -> float:
    y_hat, y = _take(y_hat, idx), _take(Y, idx)
    tp = int(((y_hat == 1) & (y == 1)).sum())
    fp = int(((y_hat == 1) & (y == 0)).sum())
    fn = int(((y_hat == 0) & (y == 1)).sum())
    denom = 2 * tp + fp + fn
    return 100.0 * 2 * tp / denom if denom else 0.0


def hybrid_score(bacc: float, delta_eo: float, delta_sp: float) -> float:
    """Model-selection score: BACC + ((100 - ΔEO) + (100 - ΔSP)) / 2."""
    return bacc + 0.5 * ((100.0 - delta_eo) + (100.0 - delta_sp))


@dataclass
class MetricsReport:
    bacc: float | None
    auc: float | None
    f1: float
    delta_sp: float | None
    delta_eo: float | None
    counts: dict[str, int] = field(default_factory=dict)

    def hybrid(self) -> float:
        """Hybrid score; an undefined term is scored as if perfect.

        Whether a term is defined depends only on the ground truth of the
        evaluated set, so the substitution is the same for every epoch and
        never changes which epoch wins.
        """
        return hybrid_score(
            100.0 if self.bacc is None else self.bacc,
            0.0 if self.delta_eo is None else self.delta_eo,
            0.0 if self.delta_sp is None else self.delta_sp,
        )

    def row(self) -> list[float | None]:
        return [getattr(self, c) for c in COLUMNS]

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> MetricsReport:
        return cls(**obj)

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(
            ["undefined" if v is None else f"{v:.2f}" for v in self.row()]
        )
        return buf.getvalue()


def cell_counts(y_hat, Y, S, idx=None) -> dict[str, int]:
    y_hat, y, s = _take(y_hat, idx), _take(Y, idx), _take(S, idx)
    counts = {}
    for yv in (0, 1):
        for sv in (0, 1):
            for pv in (0, 1):
                counts[f"y{yv}_s{sv}_pred{pv}"] = int(((y == yv) & (s == sv) & (y_hat == pv)).sum())
    return counts


def metrics_report(P, y_hat, Y, S, idx=None) -> MetricsReport:
    return MetricsReport(
        bacc=bacc(y_hat, Y, idx),
        auc=auc(P, Y, idx),
        f1=f1(y_hat, Y, idx),
        delta_sp=delta_sp(y_hat, S, idx),
        delta_eo=delta_eo(y_hat, Y, S, idx),
        counts=cell_counts(y_hat, Y, S, idx),
    )


def dumps(report: MetricsReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True)
