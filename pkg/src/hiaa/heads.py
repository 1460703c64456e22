"""The three scoring heads.

* LM head: a per-slot linear classifier over the five rating words; its
  softmax-weighted expectation turns logits into a continuous score in
  (1, 5).
* Regression head: a linear map from the final slot's hidden vector to a
  single scalar score.
* Expert head: a sparsely connected hierarchical network. A linear layer
  over the mean slot vector produces the nine leaf scores; two small FFNs
  aggregate the facial and general-appearance leaves into their parent
  scores; a third FFN combines the environment leaf with the two parents
  into the overall score. Parent nodes see only their children's scalar
  scores, so cross-branch gradients are identically zero.

All parameters are float64 ndarrays; scalar biases are 0-d arrays so the
parameter tree stays uniform for the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import HiddenStates, N_DIM_SLOTS
from .exceptions import NonFiniteInput, OutOfRange, ShapeMismatch, WrongPromptKind

N_RATING_WORDS = 5
N_LEAVES = 9
DEFAULT_FFN_WIDTH = 16

# Position of each leaf-layer output in the canonical 12-dimension order
# (leaf order: 5 facial leaves, outfit, body_shape, looks, environment).
LEAF_TO_CANONICAL = (0, 1, 2, 3, 4, 6, 7, 8, 10)
FACIAL_PARENT_INDEX = 5
APPEARANCE_PARENT_INDEX = 9
ENVIRONMENT_LEAF_POS = 8  # position of environment within the leaf vector
OVERALL_INDEX = 11


@dataclass
class LMHeadParams:
    weight: np.ndarray  # (5, D); logit row i maps to rating code i+1
    bias: np.ndarray  # (5,)


@dataclass
class RegHeadParams:
    weight: np.ndarray  # (D,)
    bias: np.ndarray  # () scalar


@dataclass
class FFNParams:
    """Two-layer net: n_in -> width -> 1 with max(0, .) in between."""

    hidden_weight: np.ndarray  # (W, n_in)
    hidden_bias: np.ndarray  # (W,)
    out_weight: np.ndarray  # (W,)
    out_bias: np.ndarray  # () scalar


@dataclass
class ExpertHeadParams:
    leaf_weight: np.ndarray  # (9, D)
    leaf_bias: np.ndarray  # (9,)
    facial: FFNParams  # 5 -> W -> 1
    appearance: FFNParams  # 3 -> W -> 1
    overall: FFNParams  # 3 -> W -> 1


# Initialization convention for the heads: score readouts start with zero
# weights and the bias at the score-scale midpoint, so the earliest updates
# chase signal instead of unwinding a random projection or fixing the
# output offset. Aggregator FFNs start as random positive weighted
# averages of their inputs (order-preserving, units active over the score
# range); training refines the weighting.


def init_lm_head(hidden_dim: int) -> LMHeadParams:
    # Zero logits = uniform over the five rating words.
    return LMHeadParams(
        weight=np.zeros((N_RATING_WORDS, hidden_dim)), bias=np.zeros(N_RATING_WORDS)
    )


def init_reg_head(hidden_dim: int) -> RegHeadParams:
    return RegHeadParams(weight=np.zeros(hidden_dim), bias=np.full((), 0.5))


def _init_aggregator_ffn(rng: np.random.Generator, n_in: int, width: int) -> FFNParams:
    hidden_weight = rng.uniform(0.0, 1.0, size=(width, n_in))
    hidden_bias = np.full(width, 0.1)
    out_weight = rng.uniform(0.5, 1.5, size=width)
    out_weight /= (hidden_weight.T @ out_weight).sum()  # child weights sum to 1
    # 0-d array, not a numpy scalar: parameters must be mutable in place
    out_bias = np.asarray(-float(out_weight @ hidden_bias))
    return FFNParams(
        hidden_weight=hidden_weight,
        hidden_bias=hidden_bias,
        out_weight=out_weight,
        out_bias=out_bias,
    )


def init_expert_head(
    seed: int, hidden_dim: int, ffn_width: int = DEFAULT_FFN_WIDTH
) -> ExpertHeadParams:
    rng = np.random.default_rng(seed)
    return ExpertHeadParams(
        leaf_weight=np.zeros((N_LEAVES, hidden_dim)),
        leaf_bias=np.full(N_LEAVES, 0.5),
        facial=_init_aggregator_ffn(rng, 5, ffn_width),
        appearance=_init_aggregator_ffn(rng, 3, ffn_width),
        overall=_init_aggregator_ffn(rng, 3, ffn_width),
    )


# ---------------------------------------------------------------- LM head


def lm_logits(params: LMHeadParams, hidden: HiddenStates) -> np.ndarray:
    """Per-slot rating-word logits, shape (slot_count, 5)."""
    if hidden.matrix.shape[1] != params.weight.shape[1]:
        raise ShapeMismatch(
            f"hidden dim {hidden.matrix.shape[1]} != LM head dim {params.weight.shape[1]}"
        )
    return hidden.matrix @ params.weight.T + params.bias


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def lm_score(logits: np.ndarray) -> float:
    """Softmax-weighted expected rating code: sum_i i * softmax(logits)_i.

    Strictly inside (1, 5) for finite logits.
    """
    logits = np.asarray(logits, dtype=float)
    if logits.shape != (N_RATING_WORDS,):
        raise ShapeMismatch(f"expected 5 logits, got shape {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise NonFiniteInput("logits contain NaN or infinity")
    probs = softmax(logits)
    return float(np.arange(1, N_RATING_WORDS + 1) @ probs)


def normalize_lm_score(s_lm: float) -> float:
    """Affine map from the analytic range [1, 5] onto [0, 1]."""
    if not 1.0 <= s_lm <= 5.0:
        raise OutOfRange(f"LM score {s_lm!r} outside [1, 5]")
    return (s_lm - 1.0) / 4.0


# -------------------------------------------------------- Regression head


def reg_score(params: RegHeadParams, hidden: HiddenStates) -> float:
    """Linear readout of the final slot's hidden vector; unclamped."""
    if hidden.matrix.shape[1] != params.weight.shape[0]:
        raise ShapeMismatch(
            f"hidden dim {hidden.matrix.shape[1]} != reg head dim {params.weight.shape[0]}"
        )
    return float(params.weight @ hidden.last_token + params.bias)


# ------------------------------------------------------------ Expert head


def _ffn_forward(params: FFNParams, inputs: np.ndarray) -> tuple[float, dict]:
    pre = params.hidden_weight @ inputs + params.hidden_bias
    act = np.maximum(0.0, pre)
    out = float(params.out_weight @ act + params.out_bias)
    return out, {"inputs": inputs, "pre": pre, "act": act}


def _ffn_backward(
    params: FFNParams, cache: dict, d_out: float, grads: dict[str, np.ndarray], prefix: str
) -> np.ndarray:
    """Accumulate FFN gradients under ``prefix``; return dLoss/d(inputs)."""
    grads[prefix + ".out_weight"] += d_out * cache["act"]
    grads[prefix + ".out_bias"] += d_out
    d_act = d_out * params.out_weight
    d_pre = d_act * (cache["pre"] > 0.0)
    grads[prefix + ".hidden_weight"] += np.outer(d_pre, cache["inputs"])
    grads[prefix + ".hidden_bias"] += d_pre
    return params.hidden_weight.T @ d_pre


def expert_forward_with_cache(
    params: ExpertHeadParams, hidden: HiddenStates
) -> tuple[np.ndarray, dict]:
    """All 12 node scores in canonical order, plus backward intermediates."""
    if hidden.slot_count != N_DIM_SLOTS:
        raise WrongPromptKind(
            f"expert head needs a twelve-dimension prompt, got {hidden.slot_count} slot(s)"
        )
    if hidden.matrix.shape[1] != params.leaf_weight.shape[1]:
        raise ShapeMismatch(
            f"hidden dim {hidden.matrix.shape[1]} != expert dim {params.leaf_weight.shape[1]}"
        )
    pooled = hidden.matrix.mean(axis=0)
    leaves = params.leaf_weight @ pooled + params.leaf_bias  # (9,)
    facial, facial_cache = _ffn_forward(params.facial, leaves[:5])
    appearance, appearance_cache = _ffn_forward(params.appearance, leaves[5:8])
    overall_in = np.array([leaves[ENVIRONMENT_LEAF_POS], facial, appearance])
    overall, overall_cache = _ffn_forward(params.overall, overall_in)

    scores = np.empty(12)
    scores[list(LEAF_TO_CANONICAL)] = leaves
    scores[FACIAL_PARENT_INDEX] = facial
    scores[APPEARANCE_PARENT_INDEX] = appearance
    scores[OVERALL_INDEX] = overall
    cache = {
        "pooled": pooled,
        "facial": facial_cache,
        "appearance": appearance_cache,
        "overall": overall_cache,
    }
    return scores, cache


def expert_scores(params: ExpertHeadParams, hidden: HiddenStates) -> np.ndarray:
    """Raw (unclamped) scores for all 12 dimensions, canonical order."""
    scores, _ = expert_forward_with_cache(params, hidden)
    return scores


def expert_backward(
    params: ExpertHeadParams, cache: dict, d_scores: np.ndarray, grads: dict[str, np.ndarray]
) -> np.ndarray:
    """Accumulate expert-head gradients; return dLoss/d(hidden matrix)."""
    d_leaves = np.asarray(d_scores, dtype=float)[list(LEAF_TO_CANONICAL)].copy()
    d_facial = float(d_scores[FACIAL_PARENT_INDEX])
    d_appearance = float(d_scores[APPEARANCE_PARENT_INDEX])
    d_overall = float(d_scores[OVERALL_INDEX])

    # Overall FFN first: it also feeds gradient back into both parents.
    d_overall_in = _ffn_backward(params.overall, cache["overall"], d_overall, grads, "expert.overall")
    d_leaves[ENVIRONMENT_LEAF_POS] += d_overall_in[0]
    d_facial += d_overall_in[1]
    d_appearance += d_overall_in[2]

    d_leaves[:5] += _ffn_backward(params.facial, cache["facial"], d_facial, grads, "expert.facial")
    d_leaves[5:8] += _ffn_backward(
        params.appearance, cache["appearance"], d_appearance, grads, "expert.appearance"
    )

    pooled = cache["pooled"]
    grads["expert.leaf_weight"] += np.outer(d_leaves, pooled)
    grads["expert.leaf_bias"] += d_leaves
    d_pooled = params.leaf_weight.T @ d_leaves
    return np.broadcast_to(d_pooled / N_DIM_SLOTS, (N_DIM_SLOTS, d_pooled.shape[0])).copy()
