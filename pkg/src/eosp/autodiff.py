"""Eager reverse-mode differentiation over dense float64 arrays.

Every operation computes its forward value immediately and appends a node to
the tape.  ``Tape.backward`` walks the tape in reverse and accumulates
adjoints for the nodes registered as parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .graph import StructuralError

KINDS = (
    "leaf",
    "const",
    "matmul",
    "spmm",
    "add",
    "sub",
    "scale",
    "relu",
    "sigmoid",
    "mean",
    "abs",
    "neglog",
    "dropout",
)


_TINY = np.nextafter(0.0, 1.0)
_ONE_MINUS = np.nextafter(1.0, 0.0)


class ContractError(RuntimeError):
    pass


@dataclass(eq=False)
class Node:
    id: int
    kind: str
    inputs: tuple[int, ...]
    value: np.ndarray
    attrs: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(a: np.ndarray, b: np.ndarray, kind: str):
    try:
        out = np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise StructuralError(f"{kind}: shapes {a.shape} and {b.shape} do not conform") from None
    if out != a.shape:
        # only the second operand may be broadcast (bias rows, scalar constants)
        raise StructuralError(f"{kind}: cannot broadcast {a.shape} to {out}")


class Tape:
    """Append-only record of operations."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.params: dict[str, int] = {}

    def __len__(self):
        return len(self.nodes)

    def _push(self, kind, inputs, value, **attrs) -> Node:
        node = Node(len(self.nodes), kind, tuple(n.id for n in inputs), np.asarray(value, dtype=np.float64), attrs)
        self.nodes.append(node)
        return node

    def _own(self, node: Node) -> Node:
        if node.id >= len(self.nodes) or self.nodes[node.id] is not node:
            raise ContractError("node belongs to a different tape")
        return node

    # leaves ---------------------------------------------------------------

    def param(self, name: str, value) -> Node:
        """Leaf whose gradient is reported by ``backward``."""
        node = self._push("leaf", (), np.array(value, dtype=np.float64), name=name)
        self.params[name] = node.id
        return node

    def constant(self, value) -> Node:
        return self._push("const", (), np.array(value, dtype=np.float64))

    # operators ------------------------------------------------------------

    def record(self, kind: str, *inputs: Node, **attrs) -> Node:
        """Record ``kind`` applied to ``inputs``; returns the new node."""
        try:
            op = getattr(self, kind)
        except AttributeError:
            raise StructuralError(f"unknown operator {kind!r}") from None
        if kind not in KINDS[2:]:
            raise StructuralError(f"unknown operator {kind!r}")
        return op(*inputs, **attrs)

    def matmul(self, a: Node, b: Node) -> Node:
        self._own(a), self._own(b)
        if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
            raise StructuralError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
        return self._push("matmul", (a, b), a.value @ b.value)

    def spmm(self, matrix: sp.spmatrix, b: Node) -> Node:
        """Constant sparse matrix times a dense node."""
        self._own(b)
        if b.value.ndim != 2 or matrix.shape[1] != b.shape[0]:
            raise StructuralError(f"spmm: shapes {matrix.shape} and {b.shape} do not conform")
        return self._push("spmm", (b,), np.asarray(matrix @ b.value), matrix=matrix)

    def add(self, a: Node, b: Node) -> Node:
        self._own(a), self._own(b)
        _check_broadcast(a.value, b.value, "add")
        return self._push("add", (a, b), a.value + b.value)

    def sub(self, a: Node, b: Node) -> Node:
        self._own(a), self._own(b)
        _check_broadcast(a.value, b.value, "sub")
        return self._push("sub", (a, b), a.value - b.value)

    def scale(self, a: Node, factor) -> Node:
        """Multiply by a constant scalar or constant array of ``a``'s shape."""
        self._own(a)
        factor = np.asarray(factor, dtype=np.float64)
        _check_broadcast(a.value, factor, "scale")
        return self._push("scale", (a,), a.value * factor, factor=factor)

    def relu(self, a: Node) -> Node:
        self._own(a)
        return self._push("relu", (a,), np.maximum(a.value, 0.0))

    def sigmoid(self, a: Node) -> Node:
        self._own(a)
        # numerically stable in both tails
        x = a.value
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        # float64 rounds sigmoid(z) to exactly 1 for z > ~37; keep outputs inside (0, 1)
        np.clip(out, _TINY, _ONE_MINUS, out=out)
        return self._push("sigmoid", (a,), out)

    def mean(self, a: Node, index=None) -> Node:
        """Mean of the flattened entries of ``a`` at ``index`` (all if None)."""
        self._own(a)
        flat = a.value.reshape(-1)
        index = np.arange(flat.size) if index is None else np.asarray(index, dtype=np.int64).reshape(-1)
        if index.size == 0:
            raise ContractError("mean over an empty index set")
        return self._push("mean", (a,), flat[index].mean(), index=index)

    def abs(self, a: Node) -> Node:
        self._own(a)
        return self._push("abs", (a,), np.abs(a.value))

    def neglog(self, a: Node, lo: float = 1e-7, hi: float = 1.0 - 1e-7) -> Node:
        """``-log(clip(a, lo, hi))``; zero gradient where the clip is active."""
        self._own(a)
        return self._push("neglog", (a,), -np.log(np.clip(a.value, lo, hi)), lo=lo, hi=hi)

    def dropout(self, a: Node, mask: np.ndarray) -> Node:
        self._own(a)
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != a.shape:
            raise StructuralError(f"dropout mask {mask.shape} does not match {a.shape}")
        return self._push("dropout", (a,), a.value * mask, mask=mask)

    # convenience compositions -------------------------------------------

    def sum(self, a: Node) -> Node:
        return self.scale(self.mean(a), float(a.value.size))

    def mul(self, a: Node, b: Node) -> Node:
        """Elementwise product of two nodes (used only in tests)."""
        self._own(a), self._own(b)
        _check_broadcast(a.value, b.value, "mul")
        return self._push("mul", (a, b), a.value * b.value)

    # reverse pass ---------------------------------------------------------

    def backward(self, output: Node) -> dict[str, np.ndarray]:
        """Gradients of scalar ``output`` with respect to every parameter."""
        self._own(output)
        if output.value.size != 1:
            raise ContractError(f"backward needs a scalar output, got shape {output.shape}")
        adj: list[np.ndarray | None] = [None] * (output.id + 1)
        adj[output.id] = np.ones_like(output.value)
        for node in reversed(self.nodes[: output.id + 1]):
            g = adj[node.id]
            if g is None or not node.inputs:
                continue
            for src, grad in zip(node.inputs, _BACKWARD[node.kind](node, g, self.nodes)):
                if grad is None:
                    continue
                grad = _unbroadcast(grad, self.nodes[src].shape)
                adj[src] = grad if adj[src] is None else adj[src] + grad
        grads = {}
        for name, nid in self.params.items():
            value = self.nodes[nid].value
            g = adj[nid] if nid < len(adj) else None
            grads[name] = np.zeros_like(value) if g is None else np.array(g, dtype=np.float64)
        return grads


def _mean_backward(node, g, nodes):
    src = nodes[node.inputs[0]]
    out = np.zeros(src.value.size)
    idx = node.attrs["index"]
    np.add.at(out, idx, float(g) / idx.size)
    return (out.reshape(src.shape),)


def _neglog_backward(node, g, nodes):
    x = nodes[node.inputs[0]].value
    inside = (x > node.attrs["lo"]) & (x < node.attrs["hi"])
    safe = np.where(inside, x, 1.0)
    return (np.where(inside, -g / safe, 0.0),)


_BACKWARD: dict[str, Callable] = {
    "matmul": lambda n, g, ns: (g @ ns[n.inputs[1]].value.T, ns[n.inputs[0]].value.T @ g),
    "spmm": lambda n, g, ns: (np.asarray(n.attrs["matrix"].T @ g),),
    "add": lambda n, g, ns: (g, g),
    "sub": lambda n, g, ns: (g, -g),
    "scale": lambda n, g, ns: (g * n.attrs["factor"],),
    "relu": lambda n, g, ns: (g * (ns[n.inputs[0]].value > 0),),
    "sigmoid": lambda n, g, ns: (g * n.value * (1.0 - n.value),),
    "mean": _mean_backward,
    "abs": lambda n, g, ns: (g * np.sign(ns[n.inputs[0]].value),),
    "neglog": _neglog_backward,
    "dropout": lambda n, g, ns: (g * n.attrs["mask"],),
    "mul": lambda n, g, ns: (g * ns[n.inputs[1]].value, g * ns[n.inputs[0]].value),
}


def finite_difference_gradient(
    loss_fn: Callable[[dict[str, np.ndarray]], float],
    params: dict[str, np.ndarray],
    eps: float = 1e-5,
) -> dict[str, np.ndarray]:
    """Central-difference gradient of ``loss_fn`` at ``params``, one coordinate at a time."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    work = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    grads = {}
    for name, arr in work.items():
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(loss_fn(work))
            flat[i] = orig - eps
            down = float(loss_fn(work))
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * eps)
        grads[name] = g
    return grads


def max_relative_error(analytic: dict[str, np.ndarray], numeric: dict[str, np.ndarray]) -> float:
    """Largest per-array ``max|a - f| / max|f|`` (absolute when both vanish)."""
    worst = 0.0
    for name, a in analytic.items():
        f = numeric[name]
        diff = float(np.max(np.abs(a - f))) if a.size else 0.0
        scale = max(float(np.max(np.abs(f))) if f.size else 0.0, float(np.max(np.abs(a))) if a.size else 0.0)
        worst = max(worst, diff / scale if scale > 1e-12 else diff)
    return worst
