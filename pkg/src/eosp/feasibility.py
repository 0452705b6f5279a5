"""Joint equal-opportunity / statistical-parity feasibility on normalized confusion matrices.

Group ``a`` has negative proportion ``x`` and group ``b`` negative proportion
``y`` (base rates ``1-x`` and ``1-y``).  Fixing group b's ``tp`` and ``fp``
determines every other entry of both matrices once EO and SP are imposed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    pass


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class GroupConfusion:
    tp: float
    fp: float
    tn: float
    fn: float

    def __post_init__(self):
        entries = (self.tp, self.fp, self.tn, self.fn)
        if min(entries) < 0:
            raise ConstraintError(f"negative confusion entry in {entries}")
        if abs(sum(entries) - 1.0) > 1e-12:
            raise ConstraintError(f"confusion entries sum to {sum(entries)!r}, not 1")

    @property
    def total(self) -> float:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class BaseRates:
    x: float
    y: float

    def __post_init__(self):
        for name in ("x", "y"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name}={v} must lie in the open interval (0, 1)")


def _check_box(rates: BaseRates, tp_b, fp_b):
    tp_b, fp_b = np.asarray(tp_b, dtype=np.float64), np.asarray(fp_b, dtype=np.float64)
    if np.any(tp_b < 0) or np.any(tp_b > 1 - rates.y) or np.any(fp_b < 0) or np.any(fp_b > rates.y):
        raise DomainError(f"(tp_b, fp_b) outside [0, {1 - rates.y}] x [0, {rates.y}]")
    return tp_b, fp_b


def feasible_mask(rates: BaseRates, tp_b, fp_b) -> np.ndarray:
    """Vectorized feasibility test over arrays of in-box points."""
    tp_b, fp_b = _check_box(rates, tp_b, fp_b)
    x, y = rates.x, rates.y
    # (y - x)/(1 - y) <= fp_b/tp_b, cross-multiplied so tp_b = 0 needs no division
    ratio_ok = (y - x) * tp_b <= (1.0 - y) * fp_b
    cap_ok = fp_b + (x - y) / (1.0 - y) * tp_b <= x
    return ratio_ok & cap_ok


def check_feasible(rates: BaseRates, tp_b: float, fp_b: float) -> bool:
    return bool(feasible_mask(rates, tp_b, fp_b))


def complete_matrices(rates: BaseRates, tp_b: float, fp_b: float) -> tuple[GroupConfusion, GroupConfusion]:
    """Fill in both confusion matrices from group b's free entries."""
    if not check_feasible(rates, tp_b, fp_b):
        raise ConstraintError(f"(tp_b={tp_b}, fp_b={fp_b}) is infeasible for {rates}")
    x, y = rates.x, rates.y
    tp_a = (1.0 - x) / (1.0 - y) * tp_b
    fp_a = (x - y) / (1.0 - y) * tp_b + fp_b
    a = GroupConfusion(tp=tp_a, fp=fp_a, tn=x - fp_a, fn=1.0 - x - tp_a)
    b = GroupConfusion(tp=tp_b, fp=fp_b, tn=y - fp_b, fn=1.0 - y - tp_b)
    return a, b


def raw_entries(rates: BaseRates, tp_b, fp_b) -> np.ndarray:
    """All eight entries (a: tp, fp, tn, fn; b: tp, fp, tn, fn) without any checks."""
    x, y = rates.x, rates.y
    tp_b, fp_b = np.asarray(tp_b, dtype=np.float64), np.asarray(fp_b, dtype=np.float64)
    tp_a = (1.0 - x) / (1.0 - y) * tp_b
    fp_a = (x - y) / (1.0 - y) * tp_b + fp_b
    return np.stack([tp_a, fp_a, x - fp_a, 1.0 - x - tp_a, tp_b, fp_b, y - fp_b, 1.0 - y - tp_b])


def verify_fairness_of_completion(a: GroupConfusion, b: GroupConfusion) -> tuple[float | None, float]:
    """(TPR gap, positive-rate gap); the TPR gap is None if a group has no positives."""
    pos_a, pos_b = a.tp + a.fn, b.tp + b.fn
    eo_gap = None if pos_a <= 0 or pos_b <= 0 else abs(a.tp / pos_a - b.tp / pos_b)
    sp_gap = abs((a.tp + a.fp) - (b.tp + b.fp))
    return eo_gap, sp_gap


def region_grid(rates: BaseRates, resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell-centre grid over the box ``[0, 1-y] x [0, y]`` and its feasibility mask."""
    if resolution < 10:
        raise DomainError("resolution must be at least 10")
    tp = (np.arange(resolution) + 0.5) / resolution * (1.0 - rates.y)
    fp = (np.arange(resolution) + 0.5) / resolution * rates.y
    TP, FP = np.meshgrid(tp, fp, indexing="ij")
    return TP, FP, feasible_mask(rates, TP, FP)


def region_measure(rates: BaseRates, resolution: int = 200) -> float:
    """Feasible fraction of the free-variable box, estimated on a grid."""
    return float(region_grid(rates, resolution)[2].mean())


def exact_region_measure(rates: BaseRates) -> float:
    """Exact feasible fraction, integrating the feasible fp-interval length over tp.

    For fixed ``tp`` the feasible ``fp`` form the interval
    ``[max(0, c*tp), min(y, x + c*tp)]`` with ``c = (y-x)/(1-y)``; its length is
    piecewise linear in ``tp``, so integrating exactly between breakpoints gives
    the area.
    """
    x, y = rates.x, rates.y
    c = (y - x) / (1.0 - y)
    hi_tp = 1.0 - y
    pts = {0.0, hi_tp}
    if c != 0:
        for t in ((y - x) / c, -x / c, y / c):
            if 0.0 < t < hi_tp:
                pts.add(t)
    pts = sorted(pts)

    def length(t):
        return max(0.0, min(y, x + c * t) - max(0.0, c * t))

    area = 0.0
    for t0, t1 in zip(pts, pts[1:]):
        # length is linear on each piece; the midpoint rule is exact
        area += (t1 - t0) * length(0.5 * (t0 + t1))
    return area / ((1.0 - y) * y)
