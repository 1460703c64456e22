"""Score fusion: a small batch-normalized MLP mapping the three head
scores (normalized LM score, regression score, expert overall score) to
one final score, trained with mean absolute error while everything else
stays frozen (the trainer only ever hands it score triples, never model
parameters).

Train-mode forwards normalize with batch statistics and update the running
statistics; eval-mode forwards use the running statistics and mutate
nothing, so single-sample scoring is well-defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import glorot_uniform
from .exceptions import BatchTooSmall, EmptyTrainingSet, NonFiniteInput, NumericFailure
from .optim import make_optimizer

N_INPUTS = 3
DEFAULT_VOTER_HIDDEN = 16


@dataclass
class MetaVoterParams:
    layer1_weight: np.ndarray  # (H, 3)
    layer1_bias: np.ndarray  # (H,)
    bn1_gamma: np.ndarray  # (H,)
    bn1_beta: np.ndarray  # (H,)
    bn1_mean: np.ndarray  # (H,) running mean
    bn1_var: np.ndarray  # (H,) running variance (biased estimator)
    layer2_weight: np.ndarray  # (H, H)
    layer2_bias: np.ndarray  # (H,)
    bn2_gamma: np.ndarray
    bn2_beta: np.ndarray
    bn2_mean: np.ndarray
    bn2_var: np.ndarray
    layer3_weight: np.ndarray  # (H,)
    layer3_bias: np.ndarray  # () scalar
    momentum: float = 0.1
    eps: float = 1e-5

    @property
    def hidden(self) -> int:
        return self.layer1_weight.shape[0]


@dataclass(frozen=True)
class MetaVoterConfig:
    epochs: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "adam"


def init_metavoter(seed: int, hidden: int = DEFAULT_VOTER_HIDDEN) -> MetaVoterParams:
    rng = np.random.default_rng(seed)
    return MetaVoterParams(
        layer1_weight=glorot_uniform(rng, hidden, N_INPUTS),
        layer1_bias=np.zeros(hidden),
        bn1_gamma=np.ones(hidden),
        bn1_beta=np.zeros(hidden),
        bn1_mean=np.zeros(hidden),
        bn1_var=np.ones(hidden),
        layer2_weight=glorot_uniform(rng, hidden, hidden),
        layer2_bias=np.zeros(hidden),
        bn2_gamma=np.ones(hidden),
        bn2_beta=np.zeros(hidden),
        bn2_mean=np.zeros(hidden),
        bn2_var=np.ones(hidden),
        layer3_weight=np.zeros(hidden),
        # Output readout starts at the score-scale midpoint (same
        # convention as the scoring heads).
        layer3_bias=np.full((), 0.5),
    )


def metavoter_param_tree(params: MetaVoterParams) -> dict[str, np.ndarray]:
    """Trainable arrays only; running statistics are not optimized."""
    return {
        "metavoter.layer1_weight": params.layer1_weight,
        "metavoter.layer1_bias": params.layer1_bias,
        "metavoter.bn1_gamma": params.bn1_gamma,
        "metavoter.bn1_beta": params.bn1_beta,
        "metavoter.layer2_weight": params.layer2_weight,
        "metavoter.layer2_bias": params.layer2_bias,
        "metavoter.bn2_gamma": params.bn2_gamma,
        "metavoter.bn2_beta": params.bn2_beta,
        "metavoter.layer3_weight": params.layer3_weight,
        "metavoter.layer3_bias": params.layer3_bias,
    }


def _bn_train(x, gamma, beta, eps):
    mu = x.mean(axis=0)
    var = x.var(axis=0)  # biased, matching the normalization statistic
    istd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * istd
    return gamma * xhat + beta, {"xhat": xhat, "istd": istd, "mu": mu, "var": var}


def forward_train(
    params: MetaVoterParams, inputs: np.ndarray, update_stats: bool = True
) -> tuple[np.ndarray, dict]:
    """Batch forward with batch statistics; optionally updates running stats."""
    if inputs.ndim != 2 or inputs.shape[1] != N_INPUTS:
        raise NonFiniteInput(f"expected (batch, 3) inputs, got shape {inputs.shape}")
    if inputs.shape[0] < 2:
        raise BatchTooSmall(f"train mode needs a batch of >= 2, got {inputs.shape[0]}")
    if not np.all(np.isfinite(inputs)):
        raise NonFiniteInput("fusion inputs contain NaN or infinity")

    z1 = inputs @ params.layer1_weight.T + params.layer1_bias
    y1, bn1 = _bn_train(z1, params.bn1_gamma, params.bn1_beta, params.eps)
    r1 = np.maximum(0.0, y1)
    z2 = r1 @ params.layer2_weight.T + params.layer2_bias
    y2, bn2 = _bn_train(z2, params.bn2_gamma, params.bn2_beta, params.eps)
    r2 = np.maximum(0.0, y2)
    out = r2 @ params.layer3_weight + params.layer3_bias

    if update_stats:
        m = params.momentum
        params.bn1_mean[:] = (1.0 - m) * params.bn1_mean + m * bn1["mu"]
        params.bn1_var[:] = (1.0 - m) * params.bn1_var + m * bn1["var"]
        params.bn2_mean[:] = (1.0 - m) * params.bn2_mean + m * bn2["mu"]
        params.bn2_var[:] = (1.0 - m) * params.bn2_var + m * bn2["var"]

    cache = {"inputs": inputs, "bn1": bn1, "y1": y1, "r1": r1, "bn2": bn2, "y2": y2, "r2": r2}
    return out, cache


def forward_eval(params: MetaVoterParams, inputs: np.ndarray) -> np.ndarray:
    """Pure forward using running statistics; safe for batch size 1."""
    z1 = inputs @ params.layer1_weight.T + params.layer1_bias
    y1 = params.bn1_gamma * (z1 - params.bn1_mean) / np.sqrt(params.bn1_var + params.eps) + params.bn1_beta
    r1 = np.maximum(0.0, y1)
    z2 = r1 @ params.layer2_weight.T + params.layer2_bias
    y2 = params.bn2_gamma * (z2 - params.bn2_mean) / np.sqrt(params.bn2_var + params.eps) + params.bn2_beta
    r2 = np.maximum(0.0, y2)
    return r2 @ params.layer3_weight + params.layer3_bias


def metavoter_forward(params, s_lm_norm, s_reg, s_exp, mode: str = "eval"):
    """Fuse the three head scores into the final score.

    Scalars in, scalar out (eval mode); equal-length arrays in, array out.
    Train mode requires arrays forming a batch of at least two and updates
    the running statistics as a side effect.
    """
    inputs = np.stack(
        [np.atleast_1d(np.asarray(x, dtype=float)) for x in (s_lm_norm, s_reg, s_exp)],
        axis=1,
    )
    if not np.all(np.isfinite(inputs)):
        raise NonFiniteInput("fusion inputs contain NaN or infinity")
    if mode == "train":
        out, _ = forward_train(params, inputs, update_stats=True)
    else:
        out = forward_eval(params, inputs)
    if np.isscalar(s_lm_norm) or np.asarray(s_lm_norm).ndim == 0:
        return float(out[0])
    return out


def _bn_backward(d_y, bn, gamma):
    d_xhat = d_y * gamma
    xhat, istd = bn["xhat"], bn["istd"]
    d_gamma = (d_y * xhat).sum(axis=0)
    d_beta = d_y.sum(axis=0)
    d_x = istd * (d_xhat - d_xhat.mean(axis=0) - xhat * (d_xhat * xhat).mean(axis=0))
    return d_x, d_gamma, d_beta


def backward(params: MetaVoterParams, cache: dict, d_out: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss given dLoss/d(output), shape (batch,)."""
    grads = {k: np.zeros_like(v) for k, v in metavoter_param_tree(params).items()}
    grads["metavoter.layer3_weight"] += cache["r2"].T @ d_out
    grads["metavoter.layer3_bias"] += d_out.sum()
    d_r2 = np.outer(d_out, params.layer3_weight)
    d_y2 = d_r2 * (cache["y2"] > 0.0)
    d_z2, d_g2, d_b2 = _bn_backward(d_y2, cache["bn2"], params.bn2_gamma)
    grads["metavoter.bn2_gamma"] += d_g2
    grads["metavoter.bn2_beta"] += d_b2
    grads["metavoter.layer2_weight"] += d_z2.T @ cache["r1"]
    grads["metavoter.layer2_bias"] += d_z2.sum(axis=0)
    d_r1 = d_z2 @ params.layer2_weight
    d_y1 = d_r1 * (cache["y1"] > 0.0)
    d_z1, d_g1, d_b1 = _bn_backward(d_y1, cache["bn1"], params.bn1_gamma)
    grads["metavoter.bn1_gamma"] += d_g1
    grads["metavoter.bn1_beta"] += d_b1
    grads["metavoter.layer1_weight"] += d_z1.T @ cache["inputs"]
    grads["metavoter.layer1_bias"] += d_z1.sum(axis=0)
    return grads


def mae_loss(predicted, target) -> float:
    """Mean absolute error; the subgradient at zero residual is taken as 0."""
    predicted = np.asarray(predicted, dtype=float)
    target = np.asarray(target, dtype=float)
    return float(np.mean(np.abs(predicted - target)))


def train_metavoter(
    head_scores,
    targets,
    config: MetaVoterConfig = MetaVoterConfig(),
    hidden: int = DEFAULT_VOTER_HIDDEN,
) -> MetaVoterParams:
    """Fit the fusion MLP on (s_lm_norm, s_reg, s_exp) -> target score.

    ``head_scores`` is an (n, 3) array or a sequence of triples. Runs
    seeded shuffled minibatches; a final batch of size one is dropped
    (batch statistics need two samples).
    """
    inputs = np.asarray(head_scores, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if inputs.size == 0:
        raise EmptyTrainingSet("no fusion training data")
    if inputs.ndim != 2 or inputs.shape[1] != N_INPUTS or inputs.shape[0] != targets.shape[0]:
        raise NonFiniteInput(
            f"expected (n, 3) scores with n targets, got {inputs.shape} and {targets.shape}"
        )
    if inputs.shape[0] < 2:
        raise BatchTooSmall("fusion training needs at least 2 samples")

    params = init_metavoter(config.seed, hidden)
    tree = metavoter_param_tree(params)
    opt = make_optimizer(config.optimizer, config.learning_rate)
    rng = np.random.default_rng(config.seed)
    n = inputs.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            if batch.size < 2:
                continue
            out, cache = forward_train(params, inputs[batch], update_stats=True)
            residual = out - targets[batch]
            loss = float(np.mean(np.abs(residual)))
            if not np.isfinite(loss):
                raise NumericFailure("fusion training loss is not finite")
            d_out = np.sign(residual) / batch.size
            grads = backward(params, cache, d_out)
            opt.step(tree, grads)
    return params
