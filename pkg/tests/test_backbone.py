import numpy as np
import pytest

from conftest import finite_diff_grads, gradients_agree
from hiaa.backbone import (
    BackboneParams,

    N_SLOT_EMBEDDINGS,
    PromptKind,
    derive_features,
    encode,
    encode_backward,
    encode_with_cache,
    init_backbone,
)
from hiaa.exceptions import ShapeMismatch

def zero_backbone(n_features=4, emb_dim=3, hidden_dim=5):
    return BackboneParams(
        slot_embeddings=np.zeros((N_SLOT_EMBEDDINGS, emb_dim)),
        dense1_weight=np.zeros((hidden_dim, n_features + emb_dim)),
        dense1_bias=np.zeros(hidden_dim),
        dense2_weight=np.zeros((hidden_dim, hidden_dim)),
        dense2_bias=np.zeros(hidden_dim),
    )

def test_derive_features_deterministic():
    a = derive_features(42, 32)
    b = derive_features(42, 32)
    assert np.array_equal(a.vector, b.vector)

def test_derive_features_seed_sensitivity():
    a = derive_features(42, 32)
    b = derive_features(43, 32)
    assert np.any(a.vector != b.vector)

def test_derive_features_mean_over_many_seeds():
    total = 0.0
    for seed in range(10_000):
        total += derive_features(seed, 32).vector.mean()
    assert abs(total / 10_000) < 0.05

def test_encode_zero_params_zero_output():
    params = zero_backbone()
    feats = derive_features(1, 4)
    hidden = encode(params, feats, PromptKind.TWELVE_DIM)
    assert np.array_equal(hidden.matrix, np.zeros((12, 5)))

def test_slot_counts():
    params = init_backbone(0, 4, 3, 5)
    feats = derive_features(1, 4)
    assert encode(params, feats, PromptKind.TWELVE_DIM).matrix.shape == (12, 5)
    assert encode(params, feats, PromptKind.OVERALL).matrix.shape == (1, 5)

def test_last_token_is_final_row():
    params = init_backbone(0, 4, 3, 5)
    hidden = encode(params, derive_features(1, 4), PromptKind.TWELVE_DIM)
    assert np.array_equal(hidden.last_token, hidden.matrix[11])

def test_slot_embedding_perturbation_is_slotwise():
    params = init_backbone(0, 4, 3, 5)
    feats = derive_features(7, 4)
    base = encode(params, feats, PromptKind.TWELVE_DIM).matrix
    params.slot_embeddings[3, 0] += 0.25
    bumped = encode(params, feats, PromptKind.TWELVE_DIM).matrix
    changed = np.any(base != bumped, axis=1)
    assert changed[3]
    assert not np.any(changed[np.arange(12) != 3])

def test_overall_prompt_uses_its_own_embedding():
    params = init_backbone(0, 4, 3, 5)
    feats = derive_features(7, 4)
    base = encode(params, feats, PromptKind.OVERALL).matrix
    params.slot_embeddings[:12] += 1.0
    assert np.array_equal(base, encode(params, feats, PromptKind.OVERALL).matrix)
    params.slot_embeddings[12] += 1.0
    assert np.any(base != encode(params, feats, PromptKind.OVERALL).matrix)

def test_init_backbone_deterministic():
    a = init_backbone(5, 6, 4, 8)
    b = init_backbone(5, 6, 4, 8)
    assert np.array_equal(a.dense1_weight, b.dense1_weight)
    assert np.array_equal(a.slot_embeddings, b.slot_embeddings)

def test_init_backbone_bias_and_bounds():
    params = init_backbone(5, 6, 4, 8)
    assert np.all(params.dense1_bias == 0.0)
    assert np.all(params.dense2_bias == 0.0)
    a1 = np.sqrt(6.0 / (10 + 8))
    a2 = np.sqrt(6.0 / (8 + 8))
    assert np.all(np.abs(params.dense1_weight) <= a1)
    assert np.all(np.abs(params.dense2_weight) <= a2)

def test_encode_shape_mismatch():
    params = init_backbone(0, 4, 3, 5)
    with pytest.raises(ShapeMismatch):
        encode(params, derive_features(0, 6), PromptKind.OVERALL)

def test_encode_backward_matches_finite_differences():
    rng = np.random.default_rng(0)
    params = init_backbone(3, 4, 3, 5)
    feats = derive_features(11, 4)
    probe = rng.normal(size=(12, 5))

    def loss():
        return float(np.sum(encode(params, feats, PromptKind.TWELVE_DIM).matrix * probe))

    tree = {
        "backbone.slot_embeddings": params.slot_embeddings,
        "backbone.dense1_weight": params.dense1_weight,
        "backbone.dense1_bias": params.dense1_bias,
        "backbone.dense2_weight": params.dense2_weight,
        "backbone.dense2_bias": params.dense2_bias,
    }
    grads = {k: np.zeros_like(v) for k, v in tree.items()}
    _, cache = encode_with_cache(params, feats, PromptKind.TWELVE_DIM)
    encode_backward(params, cache, probe, grads)
    numeric = finite_diff_grads(loss, tree)
    ok, detail = gradients_agree(grads, numeric)
    assert ok, detail


def test_encode_is_deterministic_and_pure():
    params = init_backbone(2, 4, 3, 5)
    feats = derive_features(3, 4)
    first = encode(params, feats, PromptKind.TWELVE_DIM).matrix
    second = encode(params, feats, PromptKind.TWELVE_DIM).matrix
    assert np.array_equal(first, second)
