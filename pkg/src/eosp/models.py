"""GCN / GraphSAGE encoders and the sigmoid node classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Node, Tape
from .graph import NormalizedAdjacency, StructuralError, mean_aggregator, normalize_adjacency

ENCODERS = ("gcn", "sage")


@dataclass
class ModelParams:
    """Weights plus the architecture hyperparameters that shaped them.

    ``arrays`` is ordered: encoder layers first (``W{k}`` for GCN,
    ``W{k}_self``/``W{k}_neigh`` for SAGE), then ``phi`` (d'x1) and ``bias`` (1x1).
    """

    arrays: dict[str, np.ndarray]
    in_dim: int
    hidden: int = 16
    depth: int = 2
    dropout: float = 0.2
    encoder_kind: str = "gcn"
    seed: int = 0

    def __post_init__(self):
        if self.encoder_kind not in ENCODERS:
            raise StructuralError(f"unknown encoder {self.encoder_kind!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise StructuralError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.depth < 1:
            raise StructuralError("depth must be at least 1")
        expected = _shapes(self.in_dim, self.hidden, self.depth, self.encoder_kind)
        if list(self.arrays) != list(expected):
            raise StructuralError(f"parameter names {list(self.arrays)} != {list(expected)}")
        for name, shape in expected.items():
            if self.arrays[name].shape != shape:
                raise StructuralError(f"{name}: shape {self.arrays[name].shape}, expected {shape}")

    def copy(self, arrays=None) -> ModelParams:
        arrays = self.arrays if arrays is None else arrays
        return ModelParams(
            {k: np.array(v, dtype=np.float64) for k, v in arrays.items()},
            self.in_dim,
            self.hidden,
            self.depth,
            self.dropout,
            self.encoder_kind,
            self.seed,
        )

    def to_json(self) -> dict:
        return {
            "encoder_kind": self.encoder_kind,
            "in_dim": self.in_dim,
            "hidden": self.hidden,
            "depth": self.depth,
            "dropout": self.dropout,
            "seed": self.seed,
            "arrays": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()} for k, v in self.arrays.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> ModelParams:
        arrays = {
            k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in obj["arrays"].items()
        }
        return cls(arrays, obj["in_dim"], obj["hidden"], obj["depth"], obj["dropout"], obj["encoder_kind"], obj["seed"])

    def save(self, path):
        # repr round-trips float64 exactly
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> ModelParams:
        return cls.from_json(json.loads(Path(path).read_text()))


def _shapes(in_dim, hidden, depth, kind) -> dict[str, tuple[int, int]]:
    shapes = {}
    dims = [in_dim] + [hidden] * depth
    for k in range(depth):
        if kind == "gcn":
            shapes[f"W{k}"] = (dims[k], dims[k + 1])
        else:
            shapes[f"W{k}_self"] = (dims[k], dims[k + 1])
            shapes[f"W{k}_neigh"] = (dims[k], dims[k + 1])
    shapes["phi"] = (hidden, 1)
    shapes["bias"] = (1, 1)
    return shapes


def init_params(
    in_dim: int,
    hidden: int = 16,
    depth: int = 2,
    dropout: float = 0.2,
    encoder_kind: str = "gcn",
    seed: int = 0,
) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization; bias starts at zero."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in _shapes(in_dim, hidden, depth, encoder_kind).items():
        if name == "bias":
            arrays[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            arrays[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParams(arrays, in_dim, hidden, depth, dropout, encoder_kind, seed)


def _dropout(tape: Tape, h: Node, rate: float, rng) -> Node:
    if rng is None or rate == 0.0:
        return h
    keep = 1.0 - rate
    mask = (rng.random(h.shape) < keep) / keep
    return tape.dropout(h, mask)


def gcn_forward(tape: Tape, weights: dict[str, Node], params: ModelParams, X, A_hat: NormalizedAdjacency, rng=None) -> Node:
    """Stacked ``relu(A_hat H W)`` layers; dropout on each layer input when ``rng`` is given."""
    if params.encoder_kind != "gcn":
        raise StructuralError("gcn_forward needs encoder_kind='gcn'")
    h = X if isinstance(X, Node) else tape.constant(X)
    for k in range(params.depth):
        h = _dropout(tape, h, params.dropout, rng)
        h = tape.relu(tape.spmm(A_hat.matrix, tape.matmul(h, weights[f"W{k}"])))
    return h


def sage_forward(
    tape: Tape, weights: dict[str, Node], params: ModelParams, X, A, rng=None, aggregator=None
) -> Node:
    """Mean-aggregator GraphSAGE over full neighborhoods.

    ``W @ concat(h_i, mean_j h_j)`` is computed as ``h_i W_self + mean_j h_j W_neigh``.
    Pass a precomputed ``mean_aggregator(A)`` as ``aggregator`` to skip rebuilding it.
    """
    if params.encoder_kind != "sage":
        raise StructuralError("sage_forward needs encoder_kind='sage'")
    agg = mean_aggregator(A) if aggregator is None else aggregator
    h = X if isinstance(X, Node) else tape.constant(X)
    for k in range(params.depth):
        h = _dropout(tape, h, params.dropout, rng)
        self_part = tape.matmul(h, weights[f"W{k}_self"])
        neigh_part = tape.spmm(agg, tape.matmul(h, weights[f"W{k}_neigh"]))
        h = tape.relu(tape.add(self_part, neigh_part))
    return h


def classify(tape: Tape, H: Node, weights: dict[str, Node]) -> Node:
    """Per-node probabilities ``sigmoid(H phi + bias)`` as an (n, 1) node."""
    return tape.sigmoid(tape.add(tape.matmul(H, weights["phi"]), weights["bias"]))


def predict_labels(P, threshold: float = 0.5) -> np.ndarray:
    """Hard labels; strictly greater than ``threshold`` maps to 1."""
    P = np.asarray(P.value if isinstance(P, Node) else P).reshape(-1)
    return (P > threshold).astype(np.int64)


class GraphModel:
    """Binds parameters to a graph; caches the propagation matrix."""

    def __init__(self, params: ModelParams, A, self_loops: bool = True):
        self.params = params
        self.A = A
        if params.encoder_kind == "gcn":
            self.propagation = normalize_adjacency(A, self_loops=self_loops)
        else:
            self.propagation = mean_aggregator(A)

    def forward(self, tape: Tape, X, rng=None, arrays=None) -> tuple[Node, dict[str, Node]]:
        """Register weights on ``tape`` and return (probabilities node, weight nodes)."""
        arrays = self.params.arrays if arrays is None else arrays
        weights = {name: tape.param(name, value) for name, value in arrays.items()}
        if self.params.encoder_kind == "gcn":
            H = gcn_forward(tape, weights, self.params, X, self.propagation, rng)
        else:
            H = sage_forward(tape, weights, self.params, X, self.A, rng, aggregator=self.propagation)
        return classify(tape, H, weights), weights

    def predict_proba(self, X, arrays=None) -> np.ndarray:
        P, _ = self.forward(Tape(), X, rng=None, arrays=arrays)
        return P.value.reshape(-1)
