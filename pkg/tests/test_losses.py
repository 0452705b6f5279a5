import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from eosp.autodiff import Tape, finite_difference_gradient, max_relative_error
from eosp.graph import ConfigurationError
from eosp.losses import (
    EmptyGroupError,
    FairnessConfig,
    GroupIndexSets,
    eo_loss,
    fairness_loss,
    pred_loss,
    sp_loss,
    total_loss,
)


def probs(tape, values):
    return tape.constant(np.asarray(values, dtype=float).reshape(-1, 1))


def value(fn, P, *args, **kw):
    t = Tape()
    return fn(t, probs(t, P), *args, **kw).item()


def test_pred_loss_max_entropy():
    assert value(pred_loss, [0.5, 0.5], [1, 0], [0, 1]) == pytest.approx(math.log(2), abs=1e-12)


def test_pred_loss_near_perfect():
    assert value(pred_loss, [1 - 1e-7], [1], [0]) == pytest.approx(1e-7, rel=1e-3)


def test_pred_loss_direct_evaluation():
    # -1/2 (ln 0.9 + ln 0.8), evaluated independently
    assert value(pred_loss, [0.9, 0.2], [1, 0], [0, 1]) == pytest.approx(0.164252033486018, abs=1e-12)


def test_pred_loss_empty_set():
    with pytest.raises(ConfigurationError):
        value(pred_loss, [0.5], [1], [])


def test_pred_loss_clamps_inside_log_only():
    # p = 0 with y = 1 would be infinite without the clamp
    assert value(pred_loss, [0.0], [1], [0]) == pytest.approx(-math.log(1e-7))


def groups(Y, S, idx=None):
    idx = np.arange(len(Y)) if idx is None else idx
    return GroupIndexSets.from_labels(np.asarray(Y), np.asarray(S), idx)


def test_sp_loss_direct_evaluation():
    g = groups([0, 0, 0], [1, 0, 1])
    assert value(sp_loss, [0.9, 0.2, 0.7], g) == pytest.approx(0.6, abs=1e-12)


def test_sp_loss_equal_means():
    assert value(sp_loss, [0.3, 0.3, 0.5, 0.1], groups([0] * 4, [1, 1, 0, 0])) == 0.0


def test_sp_loss_empty_group_zero_policy(caplog):
    with caplog.at_level(logging.WARNING):
        assert value(sp_loss, [0.9, 0.1], groups([1, 0], [0, 0])) == 0.0
    assert "empty group" in caplog.text


def test_sp_loss_empty_group_error_policy():
    with pytest.raises(EmptyGroupError):
        value(sp_loss, [0.9, 0.1], groups([1, 0], [0, 0]), policy="error")


def test_eo_loss_direct_evaluation():
    assert value(eo_loss, [0.8, 0.6], groups([1, 1], [1, 0])) == pytest.approx(0.2, abs=1e-12)


def test_eo_loss_equal_positive_predictions():
    assert value(eo_loss, [0.7, 0.1, 0.7, 0.9], groups([1, 0, 1, 0], [1, 1, 0, 0])) == 0.0


def test_eo_loss_no_positive_in_group():
    assert value(eo_loss, [0.8, 0.6], groups([1, 0], [1, 0])) == 0.0


def fair_value(P, Y, S, cfg):
    t = Tape()
    return fairness_loss(t, probs(t, P), groups(Y, S), cfg).item()


def test_fairness_loss_disabled():
    assert fair_value([0.9, 0.1, 0.4], [1, 1, 0], [1, 0, 1], FairnessConfig(0, 0)) == 0.0


def test_fairness_loss_single_term():
    assert fair_value([0.8, 0.6], [1, 1], [1, 0], FairnessConfig(1, 0)) == pytest.approx(0.2)


def test_fairness_loss_weighted():
    # eo = |0.8 - 0.6| = 0.2 on positives; sp = |mean(0.8, 0.9) - mean(0.6, 0.1)| = 0.5
    P, Y, S = [0.8, 0.6, 0.9, 0.1], [1, 1, 0, 0], [1, 0, 1, 0]
    t = Tape()
    g = groups(Y, S)
    assert eo_loss(t, probs(t, P), g).item() == pytest.approx(0.2)
    assert sp_loss(t, probs(t, P), g).item() == pytest.approx(0.5)
    assert fair_value(P, Y, S, FairnessConfig(0.5, 2)) == pytest.approx(0.5 * 0.2 + 2 * 0.5)


def test_fairness_loss_weighted_spec_numbers():
    # alpha * 0.2 + beta * 0.6 with (alpha, beta) = (0.5, 2) -> 1.3
    t = Tape()
    eo = t.constant(0.2)
    sp = t.constant(0.6)
    out = t.add(t.scale(eo, 0.5), t.scale(sp, 2.0))
    assert out.item() == pytest.approx(1.3)


def test_total_loss_reduces_to_base():
    t = Tape()
    P = probs(t, [0.9, 0.2, 0.6])
    base = pred_loss(t, P, [1, 0, 1], [0, 1, 2])
    tot = total_loss(t, base, P, groups([1, 0, 1], [1, 0, 0]), FairnessConfig(0, 0))
    assert tot.item() == base.item()


def test_total_loss_sum():
    t = Tape()
    base = t.constant(0.1643)
    P = probs(t, [0.8, 0.6, 0.9, 0.1])
    g = groups([1, 1, 0, 0], [1, 0, 1, 0])
    # fairness part = 0.5*0.2 + 2*0.5 = 1.1
    assert total_loss(t, base, P, g, FairnessConfig(0.5, 2)).item() == pytest.approx(0.1643 + 1.1)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        FairnessConfig(-1, 0)
    with pytest.raises(ConfigurationError):
        FairnessConfig(0, float("nan"))


def _logit_objective(z, Y, S, idx, cfg, part):
    t = Tape()
    zn = t.param("z", z)
    P = t.sigmoid(zn)
    g = groups(Y, S, idx)
    base = pred_loss(t, P, Y, idx)
    if part == "pred":
        out = base
    elif part == "eo":
        out = t.scale(eo_loss(t, P, g), cfg.alpha)
    elif part == "sp":
        out = t.scale(sp_loss(t, P, g), cfg.beta)
    else:
        out = total_loss(t, base, P, g, cfg)
    return t, out


def test_total_gradient_is_sum_of_parts_and_matches_fd():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(8, 1))
    Y = np.array([1, 1, 0, 1, 0, 1, 1, 0])
    S = np.array([1, 0, 1, 0, 0, 1, 0, 1])
    idx = np.arange(8)
    cfg = FairnessConfig(0.7, 1.3)
    grads = {}
    for part in ("pred", "eo", "sp", "total"):
        t, out = _logit_objective(z, Y, S, idx, cfg, part)
        grads[part] = t.backward(out)["z"]
    np.testing.assert_allclose(grads["total"], grads["pred"] + grads["eo"] + grads["sp"], rtol=1e-12, atol=1e-15)
    fd = finite_difference_gradient(lambda p: _logit_objective(p["z"], Y, S, idx, cfg, "total")[1].item(), {"z": z})
    assert max_relative_error({"z": grads["total"]}, fd) < 1e-5


# --- properties -------------------------------------------------------------

labeled_case = st.integers(2, 40).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
)


@settings(max_examples=100, deadline=None)
@given(case=labeled_case, seed=st.integers(0, 1000))
def test_losses_bounded_and_permutation_invariant(case, seed):
    P, Y, S = (np.asarray(v) for v in case)
    g = groups(Y, S)
    sp, eo = value(sp_loss, P, g), value(eo_loss, P, g)
    assert 0 <= sp <= 1 and 0 <= eo <= 1
    perm = np.random.default_rng(seed).permutation(len(P))
    gp = groups(Y[perm], S[perm])
    assert value(sp_loss, P[perm], gp) == pytest.approx(sp, abs=1e-12)
    assert value(eo_loss, P[perm], gp) == pytest.approx(eo, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(case=labeled_case, eps=st.sampled_from([1e-3, 1e-4, 1e-6]))
def test_saturated_surrogate_matches_discrete_metric(case, eps):
    _, Y, S = (np.asarray(v) for v in case)
    rng = np.random.default_rng(len(Y))
    y_hat = rng.integers(0, 2, len(Y))
    P = np.where(y_hat == 1, 1 - eps, eps)
    g = groups(Y, S)
    d_sp = oracles.delta_sp(y_hat, S)
    d_eo = oracles.delta_eo(y_hat, Y, S)
    if d_sp is not None:
        assert abs(value(sp_loss, P, g) - d_sp / 100) <= 2 * eps + 1e-12
    if d_eo is not None:
        assert abs(value(eo_loss, P, g) - d_eo / 100) <= 2 * eps + 1e-12


@settings(max_examples=50, deadline=None)
@given(case=labeled_case, noise=st.lists(st.floats(0.0, 1.0), min_size=5, max_size=5))
def test_unlabeled_probabilities_do_not_matter(case, noise):
    P, Y, S = (np.asarray(v, dtype=float) for v in case)
    n = len(P)
    idx = np.arange(n)
    Yf, Sf = np.r_[Y, np.full(5, -1)].astype(int), np.r_[S, np.full(5, -1)].astype(int)
    g = GroupIndexSets.from_labels(Yf, Sf, idx)
    for fn, args in ((sp_loss, (g,)), (eo_loss, (g,)), (pred_loss, (Yf.clip(0), idx))):
        a = value(fn, np.r_[P, np.full(5, 0.5)], *args)
        b = value(fn, np.r_[P, noise], *args)
        assert a == b
