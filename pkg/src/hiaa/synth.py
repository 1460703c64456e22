"""Synthetic corpus generator with a known hierarchical ground truth.

Leaf scores are a squashed hidden linear map of each sample's feature
vector plus observation noise; the two parent scores are the means of
their child leaves, and the overall score is the mean of the environment
leaf and the two parents. Because the generating map is known, training
runs against this corpus are recovery experiments with a measurable
target.

Two emitters share the generator: one produces scored samples directly,
the other produces raw annotation records (per-rater score lists for
twelve-dimension records, native-scale raw scores spread over a few fake
source tags for overall-only records) so the ingestion path can be
exercised end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import derive_features
from .datapipe import OVERALL, AnnotationRecord, ScoredSample, make_scored_sample
from .taxonomy import CANONICAL_ORDER, Dimension

DEFAULT_NOISE_SIGMA = 0.02
DEFAULT_F0_FRACTION = 0.54  # fraction downgraded to overall-only records

# Fake source tags for downgraded records, with native score scales.
SOURCE_SCALES = (("source-a", 1.0, 5.0), ("source-b", 0.0, 100.0), ("source-c", 1.0, 10.0))

# Zero-sum rater jitter pattern; nine raters whose mean is exactly the target.
_RATER_JITTER = np.array([-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0])

_LEAF_DIMS = tuple(d for d in CANONICAL_ORDER if d.kind == "leaf")


@dataclass(frozen=True)
class HiddenMap:
    """The generator's fixed leaf-score map: sigmoid(gain * (Wx + b))."""

    weight: np.ndarray  # (9, n_features)
    bias: np.ndarray  # (9,)
    gain: float


# Latent factor feeding each leaf, in leaf order: the five facial leaves
# share factor 0, the three appearance leaves factor 1, environment is
# factor 2. Sibling leaves therefore correlate positively, which keeps the
# parent targets (means of siblings) from collapsing to near-constants.
_LEAF_FACTOR = (0, 0, 0, 0, 0, 1, 1, 1, 2)


def make_hidden_map(
    seed: int, n_features: int, gain: float = 2.0, factor_spread: float = 0.5
) -> HiddenMap:
    rng = np.random.default_rng([seed, 0])
    proj = rng.standard_normal((3, n_features)) / np.sqrt(n_features)
    mix = np.zeros((9, 3))
    for i, g in enumerate(_LEAF_FACTOR):
        v = np.zeros(3)
        v[g] = 1.0
        v += factor_spread * rng.standard_normal(3)
        mix[i] = v / np.linalg.norm(v)
    return HiddenMap(
        weight=mix @ proj,
        bias=rng.uniform(-0.2, 0.2, size=9),
        gain=gain,
    )


def leaf_targets(hmap: HiddenMap, features: np.ndarray) -> np.ndarray:
    z = hmap.weight @ features + hmap.bias
    return 1.0 / (1.0 + np.exp(-hmap.gain * z))


def twelve_from_leaves(leaves: np.ndarray) -> np.ndarray:
    """Fill parents and overall from the nine leaf scores, canonical order."""
    facial = leaves[:5].mean()
    appearance = leaves[5:8].mean()
    environment = leaves[8]
    overall = (environment + facial + appearance) / 3.0
    out = np.empty(12)
    out[[0, 1, 2, 3, 4]] = leaves[:5]
    out[5] = facial
    out[[6, 7, 8]] = leaves[5:8]
    out[9] = appearance
    out[10] = environment
    out[11] = overall
    return out


def _generate_target_rows(
    n: int, seed: int, noise_sigma: float, n_features: int, gain: float
) -> tuple[list[int], np.ndarray, HiddenMap]:
    """Feature seeds and the 12-dimension target matrix for n records."""
    hmap = make_hidden_map(seed, n_features, gain)
    noise_rng = np.random.default_rng([seed, 2])
    base = seed * 1_000_003 + 7
    feature_seeds = [base + i for i in range(n)]
    targets = np.empty((n, 12))
    for i, fs in enumerate(feature_seeds):
        x = derive_features(fs, n_features).vector
        leaves = leaf_targets(hmap, x) + noise_rng.normal(0.0, noise_sigma, size=9)
        targets[i] = twelve_from_leaves(np.clip(leaves, 0.0, 1.0))
    return feature_seeds, targets, hmap


def _downgrade_picks(n: int, seed: int, f0_fraction: float) -> set[int]:
    k = round(f0_fraction * n)
    rng = np.random.default_rng([seed, 1])
    return set(int(i) for i in rng.permutation(n)[:k])


def generate_samples(
    n: int,
    seed: int,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    f0_fraction: float = 0.0,
    n_features: int = 32,
    gain: float = 2.0,
) -> list[ScoredSample]:
    """Scored samples straight from the generator (no ingestion round trip).

    Downgraded samples keep only their overall score (f=0); their source
    tag still cycles through the fake source names so splits stay
    per-source.
    """
    feature_seeds, targets, _ = _generate_target_rows(n, seed, noise_sigma, n_features, gain)
    downgraded = _downgrade_picks(n, seed, f0_fraction)
    samples = []
    n_down = 0
    for i in range(n):
        sample_id = f"synth-{i:06d}"
        if i in downgraded:
            source = SOURCE_SCALES[n_down % len(SOURCE_SCALES)][0]
            n_down += 1
            samples.append(
                make_scored_sample(
                    sample_id, source, 0, {OVERALL: float(targets[i, 11])}, feature_seeds[i]
                )
            )
        else:
            scores = {d: float(targets[i, j]) for j, d in enumerate(CANONICAL_ORDER)}
            samples.append(make_scored_sample(sample_id, "manual", 1, scores, feature_seeds[i]))
    return samples


def generate_records(
    n: int,
    seed: int,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    f0_fraction: float = DEFAULT_F0_FRACTION,
    n_features: int = 32,
    gain: float = 2.0,
) -> list[AnnotationRecord]:
    """Raw annotation records for the ingestion pipeline.

    Twelve-dimension records carry nine rater scores per dimension whose
    mean reproduces the target exactly; downgraded records carry one raw
    overall score on a fake source's native scale.
    """
    feature_seeds, targets, _ = _generate_target_rows(n, seed, noise_sigma, n_features, gain)
    downgraded = _downgrade_picks(n, seed, f0_fraction)
    records = []
    n_down = 0
    for i in range(n):
        sample_id = f"synth-{i:06d}"
        if i in downgraded:
            source, lo, hi = SOURCE_SCALES[n_down % len(SOURCE_SCALES)]
            n_down += 1
            records.append(
                AnnotationRecord(
                    sample_id=sample_id,
                    source=source,
                    feature_seed=feature_seeds[i],
                    raw_overall=float(lo + targets[i, 11] * (hi - lo)),
                )
            )
        else:
            rater_scores: dict[Dimension, tuple[float, ...]] = {}
            for j, dim in enumerate(CANONICAL_ORDER):
                t = targets[i, j]
                amp = min(0.05, t, 1.0 - t)
                rater_scores[dim] = tuple(float(t + amp * u) for u in _RATER_JITTER)
            records.append(
                AnnotationRecord(
                    sample_id=sample_id,
                    source="manual",
                    feature_seed=feature_seeds[i],
                    rater_scores=rater_scores,
                )
            )
    return records
