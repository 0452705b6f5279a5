"""Graph data model: datasets, normalized adjacency and train/val/test splits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

MISSING = -1


class StructuralError(ValueError):
    """Input violates a shape or structure contract."""


class ConfigurationError(ValueError):
    """Requested configuration cannot be satisfied."""


def _as_csr(A) -> sp.csr_matrix:
    if sp.issparse(A):
        return sp.csr_matrix(A, dtype=np.float64)
    return sp.csr_matrix(np.asarray(A, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable attributed graph.

    ``Y`` and ``S`` hold 0/1 values, with ``MISSING`` (-1) for unobserved
    entries.  ``labeled`` are the nodes whose label and sensitive attribute
    are both observed; ``unlabeled`` is the complement.
    """

    X: np.ndarray
    A: sp.csr_matrix
    Y: np.ndarray
    S: np.ndarray
    labeled: np.ndarray = field(default=None)
    unlabeled: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise StructuralError(f"features must be 2-D, got shape {X.shape}")
        n = X.shape[0]
        A = _as_csr(self.A)
        if A.shape != (n, n):
            raise StructuralError(f"adjacency shape {A.shape} does not match n={n}")
        Y = np.array(self.Y, dtype=np.int64).reshape(-1)
        S = np.array(self.S, dtype=np.int64).reshape(-1)
        if Y.shape[0] != n or S.shape[0] != n:
            raise StructuralError("labels and sensitive attributes need one entry per node")
        for name, v in (("label", Y), ("sensitive", S)):
            bad = ~np.isin(v, (MISSING, 0, 1))
            if bad.any():
                raise StructuralError(
                    f"{name} values must be binary; node {int(np.flatnonzero(bad)[0])} has {int(v[bad][0])}"
                )
        if self.labeled is None:
            labeled = np.flatnonzero((Y != MISSING) & (S != MISSING))
        else:
            labeled = np.unique(np.asarray(self.labeled, dtype=np.int64))
        if self.unlabeled is None:
            unlabeled = np.setdiff1d(np.arange(n), labeled)
        else:
            unlabeled = np.unique(np.asarray(self.unlabeled, dtype=np.int64))
        for arr in (X, Y, S, labeled, unlabeled):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "labeled", labeled)
        object.__setattr__(self, "unlabeled", unlabeled)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def num_edges(self) -> int:
        """Undirected edge count (self-loops excluded)."""
        return int(sp.triu(self.A, k=1).count_nonzero())

    def with_labeled(self, labeled) -> Dataset:
        """Copy with a different labeled set; the rest become unlabeled."""
        return Dataset(self.X, self.A, self.Y, self.S, labeled=labeled)

    def edge_list(self) -> np.ndarray:
        upper = sp.triu(self.A, k=1).tocoo()
        edges = np.column_stack([upper.row, upper.col]).astype(np.int64)
        return edges[np.lexsort((edges[:, 1], edges[:, 0]))]


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    matrix: sp.csr_matrix
    self_loops: bool

    @property
    def shape(self):
        return self.matrix.shape


def normalize_adjacency(A, self_loops: bool = True) -> NormalizedAdjacency:
    """Symmetric normalization ``D^-1/2 (A + self_loops*I) D^-1/2``.

    Rows and columns of zero-degree nodes are left at zero.
    """
    A = _as_csr(A)
    if A.shape[0] != A.shape[1]:
        raise StructuralError(f"adjacency must be square, got {A.shape}")
    if A.nnz and A.data.min() < 0:
        raise StructuralError("adjacency has negative entries")
    if (A != A.T).nnz:
        raise StructuralError("adjacency is not symmetric")
    if self_loops:
        A = A + sp.identity(A.shape[0], format="csr")
    deg = np.asarray(A.sum(axis=1)).reshape(-1)
    inv_sqrt = np.zeros_like(deg)
    np.divide(1.0, np.sqrt(deg), out=inv_sqrt, where=deg > 0)
    D = sp.diags(inv_sqrt)
    out = (D @ A @ D).tocsr()
    out.sort_indices()
    return NormalizedAdjacency(out, self_loops)


def mean_aggregator(A) -> sp.csr_matrix:
    """Row-normalized adjacency: row i averages over the neighbors of i."""
    A = _as_csr(A)
    deg = np.asarray(A.sum(axis=1)).reshape(-1)
    inv = np.zeros_like(deg)
    np.divide(1.0, deg, out=inv, where=deg > 0)
    return (sp.diags(inv) @ A).tocsr()


@dataclass(frozen=True)
class Splits:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int

    def to_json(self) -> dict:
        return {
            "train": [int(i) for i in self.train],
            "val": [int(i) for i in self.val],
            "test": [int(i) for i in self.test],
            "seed": int(self.seed),
        }

    @classmethod
    def from_json(cls, obj: dict) -> Splits:
        return cls(
            np.asarray(obj["train"], dtype=np.int64),
            np.asarray(obj["val"], dtype=np.int64),
            np.asarray(obj["test"], dtype=np.int64),
            int(obj["seed"]),
        )

    def __eq__(self, other):
        if not isinstance(other, Splits):
            return NotImplemented
        return (
            self.seed == other.seed
            and np.array_equal(self.train, other.train)
            and np.array_equal(self.val, other.val)
            and np.array_equal(self.test, other.test)
        )


def make_splits(dataset: Dataset, labeled_count: int, seed: int) -> Splits:
    """Random disjoint train/val/test split.

    Validation and test each take ``floor(0.25 n)`` nodes; the training set
    takes ``labeled_count``.  All three are drawn from nodes with observed
    label and sensitive attribute, since they are needed for evaluation.
    """
    n = dataset.n
    quarter = n // 4
    if labeled_count < 1 or labeled_count > n - 2 * quarter:
        raise ConfigurationError(
            f"labeled_count={labeled_count} exceeds capacity n - 2*floor(n/4) = {n - 2 * quarter}"
        )
    pool = dataset.labeled
    needed = labeled_count + 2 * quarter
    if pool.size < needed:
        raise ConfigurationError(
            f"only {pool.size} nodes have label and sensitive attribute; {needed} required"
        )
    rng = np.random.default_rng(seed)
    order = pool[rng.permutation(pool.size)]
    val = np.sort(order[:quarter])
    test = np.sort(order[quarter : 2 * quarter])
    train = np.sort(order[2 * quarter : 2 * quarter + labeled_count])
    return Splits(train, val, test, seed)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def __bool__(self):
        return not self.violations

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_dataset(dataset: Dataset) -> ValidationReport:
    report = ValidationReport()
    A = dataset.A
    asym = sp.triu(abs(A - A.T), k=1).tocoo()
    for i, j in zip(asym.row, asym.col):
        report.violations.append(f"asymmetric adjacency at ({i}, {j})")
    diag = np.flatnonzero(A.diagonal())
    for i in diag:
        report.violations.append(f"self-loop at node {i}")
    if A.nnz and A.data.min() < 0:
        report.violations.append("negative adjacency entries")
    rows = np.flatnonzero(~np.isfinite(dataset.X).all(axis=1))
    for i in rows:
        report.violations.append(f"non-finite features at node {i}")
    lab = dataset.labeled
    for i in lab[dataset.Y[lab] == MISSING]:
        report.violations.append(f"labeled node {i} has no label")
    for i in lab[dataset.S[lab] == MISSING]:
        report.violations.append(f"labeled node {i} has no sensitive attribute")
    overlap = np.intersect1d(dataset.labeled, dataset.unlabeled)
    if overlap.size or dataset.labeled.size + dataset.unlabeled.size != dataset.n:
        report.violations.append("labeled and unlabeled sets do not partition the nodes")
    return report
