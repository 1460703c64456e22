"""Stage-1 joint training of the encoder and the three heads.

Each sample contributes cross-entropy on its rating-level answer slots
plus one head-specific MSE term selected by its annotation-type flag:
overall-only samples supervise the regression head, twelve-dimension
samples supervise the expert head. The unselected head sits outside the
sample's computation graph, so its gradient is exactly zero, not merely
small. Gradients are hand-accumulated in reverse over the fixed graph;
mixed batches average per-sample losses and gradients in input order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import heads as H
from .backbone import BackboneParams, PromptKind, derive_features, encode_backward, encode_with_cache
from .datapipe import OVERALL, ScoredSample
from .exceptions import (
    BadFlag,
    ConfigError,
    CorruptFile,
    EmptyTrainingSet,
    LengthMismatch,
    NumericFailure,
    VersionMismatch,
)
from .heads import ExpertHeadParams, FFNParams, LMHeadParams, RegHeadParams, lm_logits, softmax
from .metavoter import MetaVoterParams
from .model import ModelParams, ModelSizes, init_model, stage1_param_tree, zeros_like_tree
from .optim import make_optimizer
from .taxonomy import CANONICAL_ORDER, RatingLevel

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Stage1Config:
    lambda_: float = 1.0  # weight of the regression MSE term (f=0 branch)
    mu: float = 1.0  # weight of the expert MSE term (f=1 branch)
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 1
    seed: int = 0
    optimizer: str = "adam"

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0 and self.optimizer == "adam":
            raise ConfigError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.lambda_ < 0 or self.mu < 0:
            raise ConfigError("loss weights must be >= 0")


# ----------------------------------------------------------------- losses


def cross_entropy_loss(logits: np.ndarray, target_levels: Sequence[RatingLevel]) -> float:
    """Mean over answer slots of -log softmax(logits)[target]."""
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 2 or logits.shape[0] != len(target_levels):
        raise LengthMismatch(
            f"{logits.shape[0] if logits.ndim == 2 else '?'} logit rows vs "
            f"{len(target_levels)} targets"
        )
    probs = softmax(logits)
    idx = np.array([int(t) - 1 for t in target_levels])
    return float(-np.mean(np.log(probs[np.arange(len(idx)), idx])))


def mse_loss(predicted: Sequence[float], target: Sequence[float]) -> float:
    """Mean squared error over the assessment dimensions."""
    if len(predicted) != len(target):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(target)} targets")
    if len(predicted) == 0:
        raise LengthMismatch("empty prediction list")
    diff = np.asarray(predicted, dtype=float) - np.asarray(target, dtype=float)
    return float(np.mean(diff * diff))


@dataclass
class Stage1Outputs:
    """Head outputs for one sample, on the prompt matching its flag."""

    lm_logits: np.ndarray  # (slot_count, 5)
    s_reg: float | None = None  # set when f=0
    expert_scores: np.ndarray | None = None  # (12,), set when f=1


def stage1_loss(sample: ScoredSample, outputs: Stage1Outputs, config: Stage1Config) -> float:
    """Cross-entropy plus the flag-selected head's weighted MSE."""
    if sample.f == 0:
        ce = cross_entropy_loss(outputs.lm_logits, [sample.levels[OVERALL]])
        return ce + config.lambda_ * mse_loss([outputs.s_reg], [sample.scores[OVERALL]])
    if sample.f == 1:
        levels = [sample.levels[d] for d in CANONICAL_ORDER]
        gt = [sample.scores[d] for d in CANONICAL_ORDER]
        ce = cross_entropy_loss(outputs.lm_logits, levels)
        return ce + config.mu * mse_loss(list(outputs.expert_scores), gt)
    raise BadFlag(f"sample {sample.sample_id!r} has f={sample.f!r}")


# -------------------------------------------------------- gradient engine


def sample_outputs(model: ModelParams, sample: ScoredSample) -> Stage1Outputs:
    """Forward-only head outputs (used by loss evaluation and tests)."""
    features = derive_features(sample.feature_seed, model.sizes.n_features)
    if sample.f == 0:
        hidden, _ = encode_with_cache(model.backbone, features, PromptKind.OVERALL)
        return Stage1Outputs(
            lm_logits=lm_logits(model.lm, hidden),
            s_reg=H.reg_score(model.reg, hidden),
        )
    hidden, _ = encode_with_cache(model.backbone, features, PromptKind.TWELVE_DIM)
    return Stage1Outputs(
        lm_logits=lm_logits(model.lm, hidden),
        expert_scores=H.expert_scores(model.expert, hidden),
    )


def _sample_loss_and_grad(
    model: ModelParams,
    sample: ScoredSample,
    config: Stage1Config,
    grads: dict[str, np.ndarray],
) -> float:
    """Accumulate one sample's gradient into ``grads``; return its loss."""
    features = derive_features(sample.feature_seed, model.sizes.n_features)
    prompt = PromptKind.OVERALL if sample.f == 0 else PromptKind.TWELVE_DIM
    hidden, bb_cache = encode_with_cache(model.backbone, features, prompt)
    logits = lm_logits(model.lm, hidden)

    if sample.f == 0:
        levels = [sample.levels[OVERALL]]
    else:
        levels = [sample.levels[d] for d in CANONICAL_ORDER]
    n_slots = len(levels)
    probs = softmax(logits)
    ce = float(-np.mean(np.log(probs[np.arange(n_slots), [int(t) - 1 for t in levels]])))

    d_logits = probs.copy()
    d_logits[np.arange(n_slots), [int(t) - 1 for t in levels]] -= 1.0
    d_logits /= n_slots
    grads["lm.weight"] += d_logits.T @ hidden.matrix
    grads["lm.bias"] += d_logits.sum(axis=0)
    d_hidden = d_logits @ model.lm.weight

    if sample.f == 0:
        gt = sample.scores[OVERALL]
        s_reg = H.reg_score(model.reg, hidden)
        loss = ce + config.lambda_ * (s_reg - gt) ** 2
        d_s = 2.0 * config.lambda_ * (s_reg - gt)
        grads["reg.weight"] += d_s * hidden.last_token
        grads["reg.bias"] += d_s
        d_hidden = d_hidden.copy()
        d_hidden[-1] += d_s * model.reg.weight
    else:
        gt = np.array([sample.scores[d] for d in CANONICAL_ORDER])
        scores, exp_cache = H.expert_forward_with_cache(model.expert, hidden)
        diff = scores - gt
        loss = ce + config.mu * float(np.mean(diff * diff))
        d_scores = 2.0 * config.mu * diff / scores.shape[0]
        d_hidden = d_hidden + H.expert_backward(model.expert, exp_cache, d_scores, grads)

    encode_backward(model.backbone, bb_cache, d_hidden, grads)
    return loss


def batch_loss_and_grads(
    model: ModelParams, batch: Sequence[ScoredSample], config: Stage1Config
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss and mean gradients over a batch, in input order."""
    grads = zeros_like_tree(stage1_param_tree(model))
    total = 0.0
    for sample in batch:
        total += _sample_loss_and_grad(model, sample, config, grads)
    n = len(batch)
    for g in grads.values():
        g /= n
    return total / n, grads


def batch_loss(model: ModelParams, batch: Sequence[ScoredSample], config: Stage1Config) -> float:
    """Forward-only mean loss (independent of the gradient path's backward)."""
    return float(
        np.mean([stage1_loss(s, sample_outputs(model, s), config) for s in batch])
    )


def train_stage1(
    train: Sequence[ScoredSample],
    config: Stage1Config = Stage1Config(),
    sizes: ModelSizes = ModelSizes(),
    config_echo: dict | None = None,
) -> "Checkpoint":
    """Seeded minibatch training; returns a checkpoint without a fusion section."""
    if len(train) == 0:
        raise EmptyTrainingSet("no training samples")
    config.validate()
    model = init_model(config.seed, sizes)
    tree = stage1_param_tree(model)
    opt = make_optimizer(config.optimizer, config.learning_rate)
    rng = np.random.default_rng(config.seed)
    n = len(train)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = [train[i] for i in order[start : start + config.batch_size]]
            try:
                loss, grads = batch_loss_and_grads(model, batch, config)
            except OverflowError:
                raise NumericFailure("stage-1 training loss overflowed") from None
            if not np.isfinite(loss):
                raise NumericFailure("stage-1 training loss is not finite")
            opt.step(tree, grads)
    echo = config_echo if config_echo is not None else {
        "stage1": asdict(config),
        "sizes": sizes.to_json(),
    }
    return Checkpoint(config=echo, model=model)


# ------------------------------------------------------------- checkpoint


@dataclass
class Checkpoint:
    config: dict
    model: ModelParams
    format_version: int = CHECKPOINT_FORMAT_VERSION


def _ffn_to_json(ffn: FFNParams) -> dict:
    return {
        "hidden_weight": ffn.hidden_weight.tolist(),
        "hidden_bias": ffn.hidden_bias.tolist(),
        "out_weight": ffn.out_weight.tolist(),
        "out_bias": ffn.out_bias.tolist(),
    }


def _ffn_from_json(doc: dict) -> FFNParams:
    return FFNParams(
        hidden_weight=np.asarray(doc["hidden_weight"], dtype=float),
        hidden_bias=np.asarray(doc["hidden_bias"], dtype=float),
        out_weight=np.asarray(doc["out_weight"], dtype=float),
        out_bias=np.asarray(doc["out_bias"], dtype=float),
    )


def checkpoint_to_json(ckpt: Checkpoint) -> dict:
    m = ckpt.model
    doc = {
        "format_version": ckpt.format_version,
        "config": ckpt.config,
        "sizes": m.sizes.to_json(),
        "backbone": {
            "slot_embeddings": m.backbone.slot_embeddings.tolist(),
            "dense1_weight": m.backbone.dense1_weight.tolist(),
            "dense1_bias": m.backbone.dense1_bias.tolist(),
            "dense2_weight": m.backbone.dense2_weight.tolist(),
            "dense2_bias": m.backbone.dense2_bias.tolist(),
        },
        "lm_head": {"weight": m.lm.weight.tolist(), "bias": m.lm.bias.tolist()},
        "reg_head": {"weight": m.reg.weight.tolist(), "bias": m.reg.bias.tolist()},
        "expert_head": {
            "leaf_weight": m.expert.leaf_weight.tolist(),
            "leaf_bias": m.expert.leaf_bias.tolist(),
            "facial": _ffn_to_json(m.expert.facial),
            "appearance": _ffn_to_json(m.expert.appearance),
            "overall": _ffn_to_json(m.expert.overall),
        },
    }
    if m.metavoter is not None:
        v = m.metavoter
        doc["metavoter"] = {
            "layer1_weight": v.layer1_weight.tolist(),
            "layer1_bias": v.layer1_bias.tolist(),
            "bn1_gamma": v.bn1_gamma.tolist(),
            "bn1_beta": v.bn1_beta.tolist(),
            "bn1_mean": v.bn1_mean.tolist(),
            "bn1_var": v.bn1_var.tolist(),
            "layer2_weight": v.layer2_weight.tolist(),
            "layer2_bias": v.layer2_bias.tolist(),
            "bn2_gamma": v.bn2_gamma.tolist(),
            "bn2_beta": v.bn2_beta.tolist(),
            "bn2_mean": v.bn2_mean.tolist(),
            "bn2_var": v.bn2_var.tolist(),
            "layer3_weight": v.layer3_weight.tolist(),
            "layer3_bias": v.layer3_bias.tolist(),
            "momentum": v.momentum,
            "eps": v.eps,
        }
    return doc


def checkpoint_from_json(doc: dict) -> Checkpoint:
    version = doc.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise VersionMismatch(
            f"checkpoint format_version {version!r}, this build reads "
            f"{CHECKPOINT_FORMAT_VERSION}"
        )
    try:
        sizes = ModelSizes(**doc["sizes"])
        bb = doc["backbone"]
        backbone = BackboneParams(
            slot_embeddings=np.asarray(bb["slot_embeddings"], dtype=float),
            dense1_weight=np.asarray(bb["dense1_weight"], dtype=float),
            dense1_bias=np.asarray(bb["dense1_bias"], dtype=float),
            dense2_weight=np.asarray(bb["dense2_weight"], dtype=float),
            dense2_bias=np.asarray(bb["dense2_bias"], dtype=float),
        )
        lm = LMHeadParams(
            weight=np.asarray(doc["lm_head"]["weight"], dtype=float),
            bias=np.asarray(doc["lm_head"]["bias"], dtype=float),
        )
        reg = RegHeadParams(
            weight=np.asarray(doc["reg_head"]["weight"], dtype=float),
            bias=np.asarray(doc["reg_head"]["bias"], dtype=float),
        )
        eh = doc["expert_head"]
        expert = ExpertHeadParams(
            leaf_weight=np.asarray(eh["leaf_weight"], dtype=float),
            leaf_bias=np.asarray(eh["leaf_bias"], dtype=float),
            facial=_ffn_from_json(eh["facial"]),
            appearance=_ffn_from_json(eh["appearance"]),
            overall=_ffn_from_json(eh["overall"]),
        )
        metavoter = None
        if "metavoter" in doc:
            v = doc["metavoter"]
            metavoter = MetaVoterParams(
                layer1_weight=np.asarray(v["layer1_weight"], dtype=float),
                layer1_bias=np.asarray(v["layer1_bias"], dtype=float),
                bn1_gamma=np.asarray(v["bn1_gamma"], dtype=float),
                bn1_beta=np.asarray(v["bn1_beta"], dtype=float),
                bn1_mean=np.asarray(v["bn1_mean"], dtype=float),
                bn1_var=np.asarray(v["bn1_var"], dtype=float),
                layer2_weight=np.asarray(v["layer2_weight"], dtype=float),
                layer2_bias=np.asarray(v["layer2_bias"], dtype=float),
                bn2_gamma=np.asarray(v["bn2_gamma"], dtype=float),
                bn2_beta=np.asarray(v["bn2_beta"], dtype=float),
                bn2_mean=np.asarray(v["bn2_mean"], dtype=float),
                bn2_var=np.asarray(v["bn2_var"], dtype=float),
                layer3_weight=np.asarray(v["layer3_weight"], dtype=float),
                layer3_bias=np.asarray(v["layer3_bias"], dtype=float),
                momentum=float(v["momentum"]),
                eps=float(v["eps"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"checkpoint is missing or mistypes fields ({exc})") from None
    model = ModelParams(
        sizes=sizes, backbone=backbone, lm=lm, reg=reg, expert=expert, metavoter=metavoter
    )
    return Checkpoint(config=doc.get("config", {}), model=model, format_version=version)


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_json(ckpt), fh, indent=1)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise CorruptFile(f"{path}: checkpoint must be a JSON object")
    return checkpoint_from_json(doc)
