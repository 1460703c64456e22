"""Parameter bundle, parameter-tree plumbing, and whole-model scoring.

The parameter tree flattens every trainable array into a name -> ndarray
mapping (values are the live arrays, not copies), which is what the
optimizers and the gradient engine operate on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import heads as H
from .backbone import (
    BackboneParams,
    DEFAULT_EMB_DIM,
    DEFAULT_HIDDEN_DIM,
    DEFAULT_N_FEATURES,
    PromptKind,
    derive_features,
    encode,
    init_backbone,
)
from .datapipe import ScoredSample
from .exceptions import MissingInput
from .heads import (
    ExpertHeadParams,
    LMHeadParams,
    RegHeadParams,
    lm_logits,
    lm_score,
    normalize_lm_score,
    reg_score,
)
from .metavoter import MetaVoterParams, metavoter_forward


@dataclass(frozen=True)
class ModelSizes:
    n_features: int = DEFAULT_N_FEATURES
    emb_dim: int = DEFAULT_EMB_DIM
    hidden_dim: int = DEFAULT_HIDDEN_DIM
    ffn_width: int = H.DEFAULT_FFN_WIDTH
    voter_hidden: int = 16

    def to_json(self) -> dict:
        return {
            "n_features": self.n_features,
            "emb_dim": self.emb_dim,
            "hidden_dim": self.hidden_dim,
            "ffn_width": self.ffn_width,
            "voter_hidden": self.voter_hidden,
        }


@dataclass
class ModelParams:
    sizes: ModelSizes
    backbone: BackboneParams
    lm: LMHeadParams
    reg: RegHeadParams
    expert: ExpertHeadParams
    metavoter: MetaVoterParams | None = None


def init_model(seed: int, sizes: ModelSizes = ModelSizes()) -> ModelParams:
    """Deterministic initialization; the fusion stage starts untrained."""
    return ModelParams(
        sizes=sizes,
        backbone=init_backbone(seed, sizes.n_features, sizes.emb_dim, sizes.hidden_dim),
        lm=H.init_lm_head(sizes.hidden_dim),
        reg=H.init_reg_head(sizes.hidden_dim),
        expert=H.init_expert_head(seed + 1, sizes.hidden_dim, sizes.ffn_width),
    )


def stage1_param_tree(model: ModelParams) -> dict[str, np.ndarray]:
    """Live views of every stage-1 trainable array, in a fixed order."""
    tree = {
        "backbone.slot_embeddings": model.backbone.slot_embeddings,
        "backbone.dense1_weight": model.backbone.dense1_weight,
        "backbone.dense1_bias": model.backbone.dense1_bias,
        "backbone.dense2_weight": model.backbone.dense2_weight,
        "backbone.dense2_bias": model.backbone.dense2_bias,
        "lm.weight": model.lm.weight,
        "lm.bias": model.lm.bias,
        "reg.weight": model.reg.weight,
        "reg.bias": model.reg.bias,
        "expert.leaf_weight": model.expert.leaf_weight,
        "expert.leaf_bias": model.expert.leaf_bias,
    }
    for name in ("facial", "appearance", "overall"):
        ffn = getattr(model.expert, name)
        tree[f"expert.{name}.hidden_weight"] = ffn.hidden_weight
        tree[f"expert.{name}.hidden_bias"] = ffn.hidden_bias
        tree[f"expert.{name}.out_weight"] = ffn.out_weight
        tree[f"expert.{name}.out_bias"] = ffn.out_bias
    return tree


def zeros_like_tree(tree: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in tree.items()}


@dataclass
class HeadScores:
    """Per-sample outputs of the scoring heads.

    ``lm_slot_scores`` holds the per-slot LM scores on the raw 1..5 scale
    (one per answer slot); ``s_lm`` is the sample-level LM score read from
    the slot matching the sample's annotation type. ``fused`` is None until
    the fusion stage has been trained.
    """

    sample_id: str
    f: int
    lm_slot_scores: np.ndarray
    s_lm: float
    s_lm_norm: float
    s_reg: float
    expert: np.ndarray  # (12,) canonical order
    fused: float | None = None

    @property
    def s_exp(self) -> float:
        return float(self.expert[H.OVERALL_INDEX])


def score_sample(model: ModelParams, sample: ScoredSample, fused: bool = False) -> HeadScores:
    """Run all heads on one sample.

    The LM and regression heads read the prompt matching the sample's
    annotation type (overall prompt for f=0, twelve-dimension prompt for
    f=1, where the sample-level LM score comes from the overall slot); the
    expert head always consumes the twelve-dimension prompt.
    """
    features = derive_features(sample.feature_seed, model.sizes.n_features)
    h12 = encode(model.backbone, features, PromptKind.TWELVE_DIM)
    if sample.f == 0:
        h_for_sample = encode(model.backbone, features, PromptKind.OVERALL)
    else:
        h_for_sample = h12

    logits = lm_logits(model.lm, h_for_sample)
    slot_scores = np.array([lm_score(row) for row in logits])
    s_lm = float(slot_scores[-1])  # single slot for f=0, overall slot for f=1
    s_lm_norm = normalize_lm_score(s_lm)
    s_reg = reg_score(model.reg, h_for_sample)
    expert = H.expert_scores(model.expert, h12)

    fused_score = None
    if fused:
        if model.metavoter is None:
            raise MissingInput("fused scoring requested but the fusion stage is untrained")
        fused_score = float(
            metavoter_forward(
                model.metavoter, s_lm_norm, s_reg, float(expert[H.OVERALL_INDEX]), mode="eval"
            )
        )
    return HeadScores(
        sample_id=sample.sample_id,
        f=sample.f,
        lm_slot_scores=slot_scores,
        s_lm=s_lm,
        s_lm_norm=s_lm_norm,
        s_reg=s_reg,
        expert=expert,
        fused=fused_score,
    )


def score_samples(
    model: ModelParams, samples: list[ScoredSample], fused: bool = False
) -> dict[str, HeadScores]:
    return {s.sample_id: score_sample(model, s, fused=fused) for s in samples}
