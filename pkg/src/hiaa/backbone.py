"""A small trainable encoder mapping (sample features, prompt kind) to one
hidden vector per answer slot.

Each sample carries a ``feature_seed`` from which a deterministic feature
vector is drawn. The encoder concatenates the features with a learned
per-slot embedding and pushes the result through two dense layers with a
tanh in between, producing a ``slot_count x hidden_dim`` matrix of hidden
states. Twelve-dimension prompts use embedding rows 0..11 in canonical
order; overall prompts use row 12.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ShapeMismatch

N_DIM_SLOTS = 12
N_SLOT_EMBEDDINGS = N_DIM_SLOTS + 1  # 12 dimension slots + 1 overall slot
OVERALL_SLOT = N_DIM_SLOTS  # embedding row used by the overall prompt

DEFAULT_N_FEATURES = 32
DEFAULT_EMB_DIM = 16
DEFAULT_HIDDEN_DIM = 64


class PromptKind(Enum):
    OVERALL = "overall"
    TWELVE_DIM = "twelve_dim"

    @property
    def slot_count(self) -> int:
        return 1 if self is PromptKind.OVERALL else N_DIM_SLOTS


@dataclass(frozen=True)
class SampleFeatures:
    """Deterministic per-sample feature vector."""

    vector: np.ndarray


@dataclass(frozen=True)
class HiddenStates:
    """Per-slot encoder outputs; ``matrix`` is slot_count x hidden_dim."""

    matrix: np.ndarray

    @property
    def slot_count(self) -> int:
        return self.matrix.shape[0]

    @property
    def last_token(self) -> np.ndarray:
        return self.matrix[-1]


@dataclass
class BackboneParams:
    slot_embeddings: np.ndarray  # (13, E)
    dense1_weight: np.ndarray  # (D, F + E)
    dense1_bias: np.ndarray  # (D,)
    dense2_weight: np.ndarray  # (D, D)
    dense2_bias: np.ndarray  # (D,)

    @property
    def emb_dim(self) -> int:
        return self.slot_embeddings.shape[1]

    @property
    def n_features(self) -> int:
        return self.dense1_weight.shape[1] - self.emb_dim

    @property
    def hidden_dim(self) -> int:
        return self.dense2_weight.shape[0]


def derive_features(feature_seed: int, n_features: int = DEFAULT_N_FEATURES) -> SampleFeatures:
    """Draw the sample's feature vector from a seeded standard-normal stream."""
    if n_features < 1:
        raise ShapeMismatch(f"n_features must be >= 1, got {n_features}")
    rng = np.random.default_rng(feature_seed)
    return SampleFeatures(vector=rng.standard_normal(n_features))


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    """Weights uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out))."""
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_out, fan_in))


def init_backbone(
    seed: int,
    n_features: int = DEFAULT_N_FEATURES,
    emb_dim: int = DEFAULT_EMB_DIM,
    hidden_dim: int = DEFAULT_HIDDEN_DIM,
) -> BackboneParams:
    """Glorot-uniform weights, zero biases, standard-normal slot embeddings."""
    if min(n_features, emb_dim, hidden_dim) < 1:
        raise ShapeMismatch("all backbone sizes must be positive")
    rng = np.random.default_rng(seed)
    return BackboneParams(
        slot_embeddings=rng.standard_normal((N_SLOT_EMBEDDINGS, emb_dim)),
        dense1_weight=glorot_uniform(rng, hidden_dim, n_features + emb_dim),
        dense1_bias=np.zeros(hidden_dim),
        dense2_weight=glorot_uniform(rng, hidden_dim, hidden_dim),
        dense2_bias=np.zeros(hidden_dim),
    )


def _slot_inputs(params: BackboneParams, features: SampleFeatures, prompt: PromptKind) -> np.ndarray:
    x = np.asarray(features.vector, dtype=float)
    if x.shape != (params.n_features,):
        raise ShapeMismatch(
            f"feature vector has shape {x.shape}, expected ({params.n_features},)"
        )
    if prompt is PromptKind.OVERALL:
        emb = params.slot_embeddings[OVERALL_SLOT : OVERALL_SLOT + 1]
    else:
        emb = params.slot_embeddings[:N_DIM_SLOTS]
    return np.hstack([np.broadcast_to(x, (emb.shape[0], x.shape[0])), emb])


def encode(params: BackboneParams, features: SampleFeatures, prompt: PromptKind) -> HiddenStates:
    """h = dense2(tanh(dense1(concat(features, slot_embedding)))) per slot."""
    hidden, _ = encode_with_cache(params, features, prompt)
    return hidden


def encode_with_cache(
    params: BackboneParams, features: SampleFeatures, prompt: PromptKind
) -> tuple[HiddenStates, dict]:
    """Forward pass that also returns the intermediates needed by backward."""
    inputs = _slot_inputs(params, features, prompt)  # (S, F+E)
    act1 = np.tanh(inputs @ params.dense1_weight.T + params.dense1_bias)  # (S, D)
    matrix = act1 @ params.dense2_weight.T + params.dense2_bias  # (S, D)
    cache = {"inputs": inputs, "act1": act1, "prompt": prompt}
    return HiddenStates(matrix=matrix), cache


def encode_backward(
    params: BackboneParams, cache: dict, d_hidden: np.ndarray, grads: dict[str, np.ndarray]
) -> None:
    """Accumulate gradients of a scalar loss w.r.t. backbone parameters.

    ``d_hidden`` is dLoss/d(hidden matrix), shape (S, D). Gradients are
    added into ``grads`` under the ``backbone.*`` keys.
    """
    inputs, act1, prompt = cache["inputs"], cache["act1"], cache["prompt"]
    grads["backbone.dense2_weight"] += d_hidden.T @ act1
    grads["backbone.dense2_bias"] += d_hidden.sum(axis=0)
    d_act1 = d_hidden @ params.dense2_weight
    d_pre1 = d_act1 * (1.0 - act1 * act1)
    grads["backbone.dense1_weight"] += d_pre1.T @ inputs
    grads["backbone.dense1_bias"] += d_pre1.sum(axis=0)
    d_inputs = d_pre1 @ params.dense1_weight
    d_emb = d_inputs[:, params.n_features :]
    if prompt is PromptKind.OVERALL:
        grads["backbone.slot_embeddings"][OVERALL_SLOT] += d_emb[0]
    else:
        grads["backbone.slot_embeddings"][:N_DIM_SLOTS] += d_emb
