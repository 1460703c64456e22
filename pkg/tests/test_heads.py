import math

import numpy as np
import pytest

from conftest import finite_diff_grads, gradients_agree
from hiaa.backbone import HiddenStates
from hiaa.exceptions import NonFiniteInput, OutOfRange, ShapeMismatch, WrongPromptKind
from hiaa.heads import (
    APPEARANCE_PARENT_INDEX,
    ExpertHeadParams,
    FACIAL_PARENT_INDEX,
    FFNParams,
    LEAF_TO_CANONICAL,
    LMHeadParams,
    OVERALL_INDEX,
    RegHeadParams,
    expert_backward,
    expert_forward_with_cache,
    expert_scores,
    init_expert_head,
    lm_logits,
    lm_score,
    normalize_lm_score,
    reg_score,
)


def make_hidden(rng, slots=12, dim=6):
    return HiddenStates(matrix=rng.normal(size=(slots, dim)))


def zero_ffn(n_in, width=4):
    return FFNParams(
        hidden_weight=np.zeros((width, n_in)),
        hidden_bias=np.zeros(width),
        out_weight=np.zeros(width),
        out_bias=np.zeros(()),
    )


def zero_expert(dim=6, width=4):
    return ExpertHeadParams(
        leaf_weight=np.zeros((9, dim)),
        leaf_bias=np.zeros(9),
        facial=zero_ffn(5, width),
        appearance=zero_ffn(3, width),
        overall=zero_ffn(3, width),
    )


# ---------------------------------------------------------------- LM head


def test_lm_logits_zero_weight_gives_bias(rng):
    params = LMHeadParams(weight=np.zeros((5, 6)), bias=np.array([0.1, 0.2, 0.3, 0.4, 0.5]))
    logits = lm_logits(params, make_hidden(rng))
    assert logits.shape == (12, 5)
    for row in logits:
        assert np.allclose(row, [0.1, 0.2, 0.3, 0.4, 0.5])


def test_lm_logits_overall_has_one_row(rng):
    params = LMHeadParams(weight=rng.normal(size=(5, 6)), bias=np.zeros(5))
    assert lm_logits(params, make_hidden(rng, slots=1)).shape == (1, 5)


def test_lm_logits_linear_in_hidden(rng):
    params = LMHeadParams(weight=rng.normal(size=(5, 6)), bias=rng.normal(size=5))
    h = make_hidden(rng)
    l1 = lm_logits(params, h) - params.bias
    l2 = lm_logits(params, HiddenStates(matrix=2.0 * h.matrix)) - params.bias
    assert np.allclose(l2, 2.0 * l1)


def test_lm_score_constant_logits():
    for c in (-3.0, 0.0, 17.5):
        assert lm_score(np.full(5, c)) == pytest.approx(3.0, abs=1e-12)


def test_lm_score_peaked_low():
    # direct-formula oracle, computed independently of the implementation
    logits = [10.0, 0.0, 0.0, 0.0, 0.0]
    weights = [math.exp(v) for v in logits]
    expected = sum((i + 1) * w for i, w in enumerate(weights)) / sum(weights)
    assert expected == pytest.approx(1.000454, abs=5e-7)
    assert lm_score(np.array(logits)) == pytest.approx(expected, abs=1e-12)


def test_lm_score_reversal_symmetry():
    logits = np.array([0.0, 0.0, 0.0, 0.0, 10.0])
    assert lm_score(logits) == pytest.approx(4.999546, abs=5e-7)
    assert lm_score(logits) + lm_score(logits[::-1]) == pytest.approx(6.0, abs=1e-12)


def test_lm_score_shift_invariance(rng):
    logits = rng.normal(size=5)
    assert lm_score(logits + 123.4) == pytest.approx(lm_score(logits), abs=1e-12)


def test_lm_score_bounds_and_monotonicity(rng):
    for _ in range(200):
        logits = rng.normal(size=5) * 10
        assert 1.0 < lm_score(logits) < 5.0
    for _ in range(200):
        # moderate spread keeps the class-5 weight above float resolution
        logits = rng.normal(size=5) * 2
        bumped = logits.copy()
        bumped[4] += 0.5
        assert lm_score(bumped) > lm_score(logits)


def test_lm_score_non_finite():
    with pytest.raises(NonFiniteInput):
        lm_score(np.array([np.nan, 0, 0, 0, 0]))
    with pytest.raises(NonFiniteInput):
        lm_score(np.array([np.inf, 0, 0, 0, 0]))


def test_normalize_lm_score():
    assert normalize_lm_score(1.0) == 0.0
    assert normalize_lm_score(3.0) == 0.5
    assert normalize_lm_score(5.0) == 1.0
    with pytest.raises(OutOfRange):
        normalize_lm_score(0.99)
    with pytest.raises(OutOfRange):
        normalize_lm_score(5.01)


# -------------------------------------------------------- regression head


def test_reg_score_zero_weight_gives_bias(rng):
    params = RegHeadParams(weight=np.zeros(6), bias=np.asarray(0.7))
    assert reg_score(params, make_hidden(rng)) == pytest.approx(0.7)


def test_reg_score_coordinate_projection(rng):
    params = RegHeadParams(weight=np.eye(6)[0], bias=np.asarray(0.0))
    h = make_hidden(rng)
    h.matrix[-1, 0] = 0.42
    assert reg_score(params, h) == pytest.approx(0.42)


def test_reg_score_linear(rng):
    params = RegHeadParams(weight=rng.normal(size=6), bias=np.asarray(0.3))
    h = make_hidden(rng)
    doubled = HiddenStates(matrix=2.0 * h.matrix)
    assert reg_score(params, doubled) - 0.3 == pytest.approx(2.0 * (reg_score(params, h) - 0.3))


def test_reg_score_shape_mismatch(rng):
    params = RegHeadParams(weight=np.zeros(7), bias=np.asarray(0.0))
    with pytest.raises(ShapeMismatch):
        reg_score(params, make_hidden(rng))


# ------------------------------------------------------------ expert head


def test_expert_zero_params_zero_scores(rng):
    assert np.array_equal(expert_scores(zero_expert(), make_hidden(rng)), np.zeros(12))


def test_expert_bias_propagation(rng):
    params = zero_expert()
    leaf_bias = np.arange(1.0, 10.0) / 10.0
    params.leaf_bias[:] = leaf_bias
    params.facial.out_bias[...] = 0.77
    params.appearance.out_bias[...] = 0.55
    params.overall.out_bias[...] = 0.33
    scores = expert_scores(params, make_hidden(rng))
    assert np.allclose(scores[list(LEAF_TO_CANONICAL)], leaf_bias)
    assert scores[FACIAL_PARENT_INDEX] == pytest.approx(0.77)
    assert scores[APPEARANCE_PARENT_INDEX] == pytest.approx(0.55)
    assert scores[OVERALL_INDEX] == pytest.approx(0.33)


def test_expert_sparse_connectivity_by_perturbation(rng):
    params = init_expert_head(3, hidden_dim=6, ffn_width=4)
    tree = {
        "expert.leaf_weight": params.leaf_weight,
        "expert.leaf_bias": params.leaf_bias,
    }
    for name in ("facial", "appearance", "overall"):
        ffn = getattr(params, name)
        tree[f"expert.{name}.hidden_weight"] = ffn.hidden_weight
        tree[f"expert.{name}.hidden_bias"] = ffn.hidden_bias
        tree[f"expert.{name}.out_weight"] = ffn.out_weight
        tree[f"expert.{name}.out_bias"] = ffn.out_bias
    for arr in tree.values():
        arr[...] = np.random.default_rng(0).normal(0.3, 0.4, size=arr.shape)
    h = make_hidden(rng)
    base = expert_scores(params, h)
    # outfit is leaf index 5, canonical index 6
    params.leaf_bias[5] += 0.1
    bumped = expert_scores(params, h)
    changed = set(np.nonzero(base != bumped)[0])
    assert changed == {6, APPEARANCE_PARENT_INDEX, OVERALL_INDEX}


def test_expert_gradients_respect_sparsity(rng):
    params = init_expert_head(3, hidden_dim=6, ffn_width=4)
    h = make_hidden(rng)
    _, cache = expert_forward_with_cache(params, h)
    grads = {
        "expert.leaf_weight": np.zeros_like(params.leaf_weight),
        "expert.leaf_bias": np.zeros_like(params.leaf_bias),
    }
    for name in ("facial", "appearance", "overall"):
        ffn = getattr(params, name)
        for field in ("hidden_weight", "hidden_bias", "out_weight", "out_bias"):
            grads[f"expert.{name}.{field}"] = np.zeros_like(getattr(ffn, field))

    # selecting only the facial parent leaves appearance-branch params untouched
    d_scores = np.zeros(12)
    d_scores[FACIAL_PARENT_INDEX] = 1.0
    expert_backward(params, cache, d_scores, grads)
    for field in ("hidden_weight", "hidden_bias", "out_weight", "out_bias"):
        assert np.all(grads[f"expert.appearance.{field}"] == 0.0)
        assert np.all(grads[f"expert.overall.{field}"] == 0.0)

    # selecting only a leaf leaves every FFN untouched
    for g in grads.values():
        g[...] = 0.0
    d_scores = np.zeros(12)
    d_scores[0] = 1.0
    expert_backward(params, cache, d_scores, grads)
    for name in ("facial", "appearance", "overall"):
        for field in ("hidden_weight", "hidden_bias", "out_weight", "out_bias"):
            assert np.all(grads[f"expert.{name}.{field}"] == 0.0)


def test_expert_backward_matches_finite_differences(rng):
    params = init_expert_head(5, hidden_dim=6, ffn_width=4)
    tree = {
        "expert.leaf_weight": params.leaf_weight,
        "expert.leaf_bias": params.leaf_bias,
    }
    for name in ("facial", "appearance", "overall"):
        ffn = getattr(params, name)
        for field in ("hidden_weight", "hidden_bias", "out_weight", "out_bias"):
            tree[f"expert.{name}.{field}"] = getattr(ffn, field)
    for arr in tree.values():
        arr[...] = rng.normal(0.1, 0.5, size=arr.shape)
    h = make_hidden(rng)
    probe = rng.normal(size=12)

    def loss():
        return float(expert_scores(params, h) @ probe)

    grads = {k: np.zeros_like(v) for k, v in tree.items()}
    _, cache = expert_forward_with_cache(params, h)
    expert_backward(params, cache, probe, grads)
    numeric = finite_diff_grads(loss, tree)
    ok, detail = gradients_agree(grads, numeric)
    assert ok, detail


def test_expert_wrong_prompt_kind(rng):
    with pytest.raises(WrongPromptKind):
        expert_scores(zero_expert(), make_hidden(rng, slots=1))
