"""Cross-entropy and the differentiable SP / EO fairness regularizers."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .autodiff import Node, Tape
from .graph import ConfigurationError, MISSING

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-7


class EmptyGroupError(ValueError):
    pass


@dataclass(frozen=True)
class FairnessConfig:
    alpha: float = 0.0  # weight of the equal-opportunity term
    beta: float = 0.0  # weight of the statistical-parity term
    empty_group_policy: str = "zero"

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigurationError(f"{name} must be finite and non-negative, got {v}")
        if self.empty_group_policy not in ("zero", "error"):
            raise ConfigurationError(f"unknown empty_group_policy {self.empty_group_policy!r}")

    @property
    def active(self) -> bool:
        return self.alpha > 0 or self.beta > 0


@dataclass(frozen=True)
class GroupIndexSets:
    D1: np.ndarray
    D0: np.ndarray
    P1: np.ndarray
    P0: np.ndarray

    @classmethod
    def from_labels(cls, Y, S, index) -> GroupIndexSets:
        """Split ``index`` by sensitive attribute, and positives by attribute."""
        index = np.asarray(index, dtype=np.int64)
        Y, S = np.asarray(Y), np.asarray(S)
        s, y = S[index], Y[index]
        if (s == MISSING).any() or (y == MISSING).any():
            raise ConfigurationError("fairness groups need label and sensitive attribute on every index")
        return cls(
            D1=index[s == 1],
            D0=index[s == 0],
            P1=index[(s == 1) & (y == 1)],
            P0=index[(s == 0) & (y == 1)],
        )


def pred_loss(tape: Tape, P: Node, Y, index) -> Node:
    """Mean binary cross-entropy over ``index``; probabilities clamped inside the logs."""
    index = np.asarray(index, dtype=np.int64)
    if index.size == 0:
        raise ConfigurationError("cross-entropy over an empty labeled set")
    y = np.zeros(P.shape)
    y.reshape(-1)[index] = np.asarray(Y).reshape(-1)[index]
    one = tape.constant(np.ones(P.shape))
    pos = tape.scale(tape.neglog(P, PROB_CLAMP, 1.0 - PROB_CLAMP), y)
    neg = tape.scale(tape.neglog(tape.sub(one, P), PROB_CLAMP, 1.0 - PROB_CLAMP), 1.0 - y)
    return tape.mean(tape.add(pos, neg), index)


def _gap(tape: Tape, P: Node, g1, g0, policy: str, what: str) -> Node:
    if len(g1) == 0 or len(g0) == 0:
        if policy == "error":
            raise EmptyGroupError(f"{what}: a group is empty (|1|={len(g1)}, |0|={len(g0)})")
        log.warning("%s: empty group (|1|=%d, |0|=%d); term contributes 0", what, len(g1), len(g0))
        return tape.constant(0.0)
    return tape.abs(tape.sub(tape.mean(P, g1), tape.mean(P, g0)))


def sp_loss(tape: Tape, P: Node, groups: GroupIndexSets, policy: str = "zero") -> Node:
    """|mean p over s=1  -  mean p over s=0|."""
    return _gap(tape, P, groups.D1, groups.D0, policy, "sp_loss")


def eo_loss(tape: Tape, P: Node, groups: GroupIndexSets, policy: str = "zero") -> Node:
    """|mean p over (y=1, s=1)  -  mean p over (y=1, s=0)|."""
    return _gap(tape, P, groups.P1, groups.P0, policy, "eo_loss")


def fairness_loss(tape: Tape, P: Node, groups: GroupIndexSets, cfg: FairnessConfig) -> Node:
    eo = tape.scale(eo_loss(tape, P, groups, cfg.empty_group_policy), cfg.alpha)
    sp = tape.scale(sp_loss(tape, P, groups, cfg.empty_group_policy), cfg.beta)
    return tape.add(eo, sp)


def total_loss(tape: Tape, base_loss: Node, P: Node, groups: GroupIndexSets, cfg: FairnessConfig) -> Node:
    """``base_loss + alpha*L_EO + beta*L_SP``; ``base_loss`` may be any scalar node."""
    return tape.add(base_loss, fairness_loss(tape, P, groups, cfg))
