"""CSV dataset I/O, the synthetic biased-graph generator and result files."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp
try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .graph import MISSING, ConfigurationError, Dataset, validate_dataset
from .metrics import COLUMN_TITLES, COLUMNS, MetricsReport

log = logging.getLogger(__name__)


class DatasetIOError(IOError):
    pass


class SchemaError(ValueError):
    pass


# --- graph files -------------------------------------------------------------


def _parse_binary(raw: str, column: str, path, lineno: int) -> int:
    raw = raw.strip()
    if raw == "":
        return MISSING
    try:
        value = float(raw)
    except ValueError:
        raise DatasetIOError(f"{path}:{lineno}: {column} value {raw!r} is not numeric") from None
    if value not in (0.0, 1.0):
        raise SchemaError(f"{path}:{lineno}: {column} must be 0 or 1, got {raw!r}")
    return int(value)


def load_dataset(nodes_path, edges_path) -> Dataset:
    """Read a nodes CSV (``id,feat_*,label,sensitive``) and an undirected edges CSV (``src,dst``)."""
    nodes_path, edges_path = Path(nodes_path), Path(edges_path)
    for p in (nodes_path, edges_path):
        if not p.exists():
            raise FileNotFoundError(f"no such file: {p}")
    with nodes_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetIOError(f"{nodes_path}: empty file")
        header = [h.strip() for h in header]
        feat_cols = [i for i, h in enumerate(header) if h.startswith("feat_")]
        try:
            id_col, y_col, s_col = header.index("id"), header.index("label"), header.index("sensitive")
        except ValueError:
            raise DatasetIOError(f"{nodes_path}:1: header needs id, feat_*, label, sensitive columns") from None
        ids, feats, ys, ss = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetIOError(f"{nodes_path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                ids.append(int(row[id_col]))
                feats.append([float(row[i]) for i in feat_cols])
            except ValueError as exc:
                raise DatasetIOError(f"{nodes_path}:{lineno}: {exc}") from None
            ys.append(_parse_binary(row[y_col], "label", nodes_path, lineno))
            ss.append(_parse_binary(row[s_col], "sensitive", nodes_path, lineno))
    n = len(ids)
    index = {node_id: pos for pos, node_id in enumerate(ids)}
    if len(index) != n:
        raise DatasetIOError(f"{nodes_path}: duplicate node ids")
    src, dst = [], []
    with edges_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                u, v = index[int(row[0])], index[int(row[1])]
            except (ValueError, IndexError):
                raise DatasetIOError(f"{edges_path}:{lineno}: malformed edge {row!r}") from None
            except KeyError as exc:
                raise DatasetIOError(f"{edges_path}:{lineno}: unknown node id {exc.args[0]}") from None
            if u == v:
                log.warning("%s:%d: self-edge on node %s dropped", edges_path, lineno, row[0])
                continue
            src += [u, v]
            dst += [v, u]
    A = sp.coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n)).tocsr()
    A.data[:] = 1.0  # collapse duplicates
    X = np.asarray(feats, dtype=np.float64).reshape(n, len(feat_cols))
    ds = Dataset(X, A, np.asarray(ys), np.asarray(ss))
    report = validate_dataset(ds)
    if not report.ok:
        raise SchemaError(f"{nodes_path}: {report.violations[0]}")
    return ds


def save_dataset(dataset: Dataset, nodes_path, edges_path) -> None:
    with Path(nodes_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"feat_{k}" for k in range(dataset.d)] + ["label", "sensitive"])
        for i in range(dataset.n):
            y, s = dataset.Y[i], dataset.S[i]
            w.writerow(
                [i]
                + [repr(float(v)) for v in dataset.X[i]]
                + ["" if y == MISSING else int(y), "" if s == MISSING else int(s)]
            )
    with Path(edges_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst"])
        w.writerows(dataset.edge_list().tolist())


# --- synthetic graphs --------------------------------------------------------


@dataclass
class SyntheticConfig:
    """Two-block stochastic graph with correlated label and sensitive attribute.

    ``label_attr_correlation`` is the phi coefficient between y and s.
    Features are cell means plus unit Gaussian noise; unless ``feature_shift``
    gives the four (y, s) cell mean vectors explicitly (rows ordered
    (0,0), (0,1), (1,0), (1,1)), the first ``label_dims`` features are shifted
    by ``±label_shift/2`` according to y and the next ``group_dims`` by
    ``±group_shift/2`` according to s.
    """

    n: int = 1000
    label_balance: float = 0.5
    group_balance: float = 0.5
    label_attr_correlation: float = 0.0
    intra_edge_prob: float = 0.02
    inter_edge_prob: float = 0.004
    feature_dim: int = 16
    label_shift: float = 1.0
    group_shift: float = 1.0
    label_dims: int = 4
    group_dims: int = 4
    feature_shift: list | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("n must be at least 2")
        for name in ("label_balance", "group_balance"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1)")
        if not -1.0 <= self.label_attr_correlation <= 1.0:
            raise ConfigurationError("label_attr_correlation must lie in [-1, 1]")
        for name in ("intra_edge_prob", "inter_edge_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if self.label_dims + self.group_dims > self.feature_dim and self.feature_shift is None:
            raise ConfigurationError("label_dims + group_dims exceeds feature_dim")

    @classmethod
    def from_toml(cls, path, **overrides) -> SyntheticConfig:
        with Path(path).open("rb") as fh:
            raw = tomllib.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)

    def joint(self) -> np.ndarray:
        """Cell probabilities indexed ``[y, s]``."""
        py, ps, rho = self.label_balance, self.group_balance, self.label_attr_correlation
        sd = math.sqrt(py * (1 - py) * ps * (1 - ps))
        lo = max(-py * ps, -(1 - py) * (1 - ps)) / sd
        hi = min(py * (1 - ps), (1 - py) * ps) / sd
        if not lo - 1e-12 <= rho <= hi + 1e-12:
            raise ConfigurationError(
                f"label_attr_correlation={rho} infeasible for these balances; must lie in [{lo:.4f}, {hi:.4f}]"
            )
        p11 = py * ps + rho * sd
        table = np.array([[1 - py - ps + p11, ps - p11], [py - p11, p11]])
        return np.clip(table, 0.0, 1.0)

    def cell_means(self) -> np.ndarray:
        """(4, d) mean vectors, row ``2*y + s``."""
        d = self.feature_dim
        if self.feature_shift is not None:
            means = np.asarray(self.feature_shift, dtype=np.float64)
            if means.shape != (4, d):
                raise ConfigurationError(f"feature_shift must have shape (4, {d})")
            return means
        means = np.zeros((4, d))
        for y in (0, 1):
            for s in (0, 1):
                row = means[2 * y + s]
                row[: self.label_dims] = (y - 0.5) * self.label_shift
                row[self.label_dims : self.label_dims + self.group_dims] = (s - 0.5) * self.group_shift
        return means


def generate_synthetic(cfg: SyntheticConfig) -> Dataset:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    probs = cfg.joint().reshape(-1)  # order (y,s): 00, 01, 10, 11
    cell = rng.choice(4, size=n, p=probs / probs.sum())
    Y, S = cell // 2, cell % 2
    X = cfg.cell_means()[cell] + rng.standard_normal((n, cfg.feature_dim))
    rows, cols = [], []
    for i in range(n - 1):
        same = S[i + 1 :] == S[i]
        p = np.where(same, cfg.intra_edge_prob, cfg.inter_edge_prob)
        hit = np.flatnonzero(rng.random(n - i - 1) < p) + i + 1
        rows.append(np.full(hit.size, i))
        cols.append(hit)
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    A = sp.coo_matrix((np.ones(2 * r.size), (np.r_[r, c], np.r_[c, r])), shape=(n, n)).tocsr()
    return Dataset(X, A, Y, S)


def attribute_assortativity(dataset: Dataset) -> float:
    """Pearson correlation of the sensitive attribute across edge endpoints."""
    e = dataset.edge_list()
    if e.size == 0:
        return 0.0
    a = np.r_[dataset.S[e[:, 0]], dataset.S[e[:, 1]]].astype(float)
    b = np.r_[dataset.S[e[:, 1]], dataset.S[e[:, 0]]].astype(float)
    if a.std() == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


# --- experiment results ------------------------------------------------------


@dataclass
class ExperimentResult:
    method: str
    reports: list[MetricsReport] = field(default_factory=list)

    def values(self, column: str) -> np.ndarray:
        return np.array([getattr(r, column) for r in self.reports if getattr(r, column) is not None], dtype=float)

    def mean(self, column: str) -> float | None:
        v = self.values(column)
        return float(v.mean()) if v.size else None

    def std(self, column: str) -> float | None:
        """Sample standard deviation (n-1); 0 for a single seed."""
        v = self.values(column)
        if v.size == 0:
            return None
        return float(v.std(ddof=1)) if v.size > 1 else 0.0

    def cell(self, column: str) -> str:
        m, s = self.mean(column), self.std(column)
        return "undefined" if m is None else f"{m:.2f} ({s:.2f})"

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "reports": [r.to_json() for r in self.reports],
            "summary": {c: {"mean": self.mean(c), "std": self.std(c)} for c in COLUMNS},
        }

    @classmethod
    def from_json(cls, obj: dict) -> ExperimentResult:
        return cls(obj["method"], [MetricsReport.from_json(r) for r in obj["reports"]])

    def __eq__(self, other):
        if not isinstance(other, ExperimentResult):
            return NotImplemented
        return self.method == other.method and [asdict(r) for r in self.reports] == [
            asdict(r) for r in other.reports
        ]


def write_results(results: list[ExperimentResult], path, fmt: str = "csv") -> None:
    path = Path(path)
    try:
        if fmt == "csv":
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["Method", *COLUMN_TITLES])
                for res in results:
                    w.writerow([res.method, *(res.cell(c) for c in COLUMNS)])
        elif fmt == "json":
            payload = [r.to_json() for r in results]
            path.write_text(json.dumps(payload if len(payload) != 1 else payload[0], indent=2, sort_keys=True) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def write_result(result: ExperimentResult, path, fmt: str = "csv") -> None:
    write_results([result], path, fmt)


def read_result(path) -> ExperimentResult:
    return ExperimentResult.from_json(json.loads(Path(path).read_text()))
