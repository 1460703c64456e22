"""Evaluation metrics: MSE, MAE, PLCC, SRCC, KRCC, accuracy, and macro
precision/recall/F1, reported overall and per dimension.

Correlations on constant inputs are undefined and reported as a distinct
marker (None in memory, null in JSON, "undef" in text tables) rather than
silently zero. Macro classification metrics always average over the five
rating classes with a fixed denominator of 5; degenerate classes
contribute zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .datapipe import OVERALL, ScoredSample
from .exceptions import EmptyInput, LengthMismatch, MissingPrediction, TooFewValues
from .model import HeadScores
from .taxonomy import CANONICAL_ORDER, RatingLevel

HEAD_NAMES = ("lm", "reg", "expert", "metavoter")

METRIC_NAMES = (
    "mse",
    "mae",
    "plcc",
    "srcc",
    "krcc",
    "accuracy",
    "precision_macro",
    "recall_macro",
    "f1_macro",
)


def _paired_arrays(pred: Sequence[float], gt: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    if len(pred) != len(gt):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(gt)} targets")
    if len(pred) == 0:
        raise EmptyInput("no values to evaluate")
    return np.asarray(pred, dtype=float), np.asarray(gt, dtype=float)


def regression_metrics(pred: Sequence[float], gt: Sequence[float]) -> tuple[float, float]:
    """(mean squared error, mean absolute error)."""
    p, g = _paired_arrays(pred, gt)
    diff = p - g
    return float(np.mean(diff * diff)), float(np.mean(np.abs(diff)))


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    xc = x - x.mean()
    yc = y - y.mean()
    ssx = float(xc @ xc)
    ssy = float(yc @ yc)
    if ssx == 0.0 or ssy == 0.0:
        return None
    return float((xc @ yc) / np.sqrt(ssx * ssy))


def correlation_metrics(
    pred: Sequence[float], gt: Sequence[float]
) -> tuple[float | None, float | None, float | None]:
    """(PLCC, SRCC, KRCC).

    PLCC is the Pearson product-moment coefficient; SRCC is Pearson over
    average ranks (ties share their mean rank); KRCC is the tie-corrected
    Kendall tau-b. A coefficient whose input is constant is returned as
    None (undefined).
    """
    p, g = _paired_arrays(pred, gt)
    if p.size < 3:
        raise TooFewValues(f"correlations need >= 3 pairs, got {p.size}")
    plcc = _pearson(p, g)
    srcc = _pearson(stats.rankdata(p, method="average"), stats.rankdata(g, method="average"))
    if np.all(p == p[0]) or np.all(g == g[0]):
        krcc = None
    else:
        tau = stats.kendalltau(p, g, variant="b").statistic
        krcc = None if np.isnan(tau) else float(tau)
    return plcc, srcc, krcc


def classification_metrics(
    pred_levels: Sequence[RatingLevel], gt_levels: Sequence[RatingLevel]
) -> tuple[float, float, float, float]:
    """(accuracy, macro precision, macro recall, macro F1) over 5 classes."""
    if len(pred_levels) != len(gt_levels):
        raise LengthMismatch(f"{len(pred_levels)} predictions vs {len(gt_levels)} targets")
    if len(pred_levels) == 0:
        raise EmptyInput("no levels to evaluate")
    p = np.asarray([int(v) for v in pred_levels])
    g = np.asarray([int(v) for v in gt_levels])
    accuracy = float(np.mean(p == g))
    precision_sum = recall_sum = f1_sum = 0.0
    for cls in range(1, 6):
        tp = int(np.sum((p == cls) & (g == cls)))
        fp = int(np.sum((p == cls) & (g != cls)))
        fn = int(np.sum((p != cls) & (g == cls)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        precision_sum += precision
        recall_sum += recall
        f1_sum += f1
    return accuracy, precision_sum / 5, recall_sum / 5, f1_sum / 5


# ----------------------------------------------------------- full reports


@dataclass
class MetricsReport:
    """Nine metrics per target ("overall" plus the 12 dimensions)."""

    head: str
    n: int
    per_target: dict[str, dict[str, float | int | None]]
    # Predicted levels are the rating-level mapping of the selected head's
    # clamped score, recorded here so report readers know the provenance.
    level_source: str = "rating_from_score(clamp(score, 0, 1))"
    config: dict = field(default_factory=dict)


def _levels_from_scores(scores: np.ndarray) -> np.ndarray:
    """Vectorized rating mapping of already-clamped scores."""
    return np.maximum(1, np.ceil(scores * 5.0)).astype(int)


def _overall_pred(hs: HeadScores, head: str) -> float:
    if head == "lm":
        return hs.s_lm_norm
    if head == "reg":
        return hs.s_reg
    if head == "expert":
        return hs.s_exp
    if head == "metavoter":
        if hs.fused is None:
            raise MissingPrediction(f"sample {hs.sample_id!r} has no fused score")
        return hs.fused
    raise MissingPrediction(f"unknown head {head!r}")


def _dim_pred(hs: HeadScores, head: str, dim_index: int) -> float:
    if head == "lm":
        # Twelve-dimension samples carry one LM score per answer slot.
        return (float(hs.lm_slot_scores[dim_index]) - 1.0) / 4.0
    if head == "expert":
        return float(hs.expert[dim_index])
    # Scalar heads broadcast their single score across dimensions.
    return _overall_pred(hs, head)


def _row(pred: np.ndarray, gt: np.ndarray) -> dict[str, float | int | None]:
    row: dict[str, float | int | None] = {"n": int(pred.size)}
    if pred.size == 0:
        row.update({name: None for name in METRIC_NAMES})
        return row
    mse, mae = regression_metrics(pred, gt)
    row["mse"], row["mae"] = mse, mae
    if pred.size >= 3:
        row["plcc"], row["srcc"], row["krcc"] = correlation_metrics(pred, gt)
    else:
        row["plcc"] = row["srcc"] = row["krcc"] = None
    pred_levels = _levels_from_scores(np.clip(pred, 0.0, 1.0))
    gt_levels = _levels_from_scores(np.clip(gt, 0.0, 1.0))
    acc, prec, rec, f1 = classification_metrics(
        [RatingLevel(int(v)) for v in pred_levels], [RatingLevel(int(v)) for v in gt_levels]
    )
    row["accuracy"], row["precision_macro"], row["recall_macro"], row["f1_macro"] = (
        acc,
        prec,
        rec,
        f1,
    )
    return row


def evaluate(
    samples: Sequence[ScoredSample],
    predictions: Mapping[str, HeadScores],
    head: str,
    config: dict | None = None,
) -> MetricsReport:
    """Score one head against ground truth.

    The "overall" row covers every sample; the 12 per-dimension rows cover
    only twelve-dimension (f=1) samples. Predicted scores are clamped to
    [0, 1] before metric computation and level mapping.
    """
    if len(samples) == 0:
        raise EmptyInput("no samples to evaluate")
    for s in samples:
        if s.sample_id not in predictions:
            raise MissingPrediction(f"no prediction for sample {s.sample_id!r}")

    per_target: dict[str, dict[str, float | int | None]] = {}
    overall_pred = np.clip(
        [_overall_pred(predictions[s.sample_id], head) for s in samples], 0.0, 1.0
    )
    overall_gt = np.array([s.scores[OVERALL] for s in samples])
    per_target["overall"] = _row(overall_pred, overall_gt)

    fine = [s for s in samples if s.f == 1]
    for j, dim in enumerate(CANONICAL_ORDER):
        pred = np.clip([_dim_pred(predictions[s.sample_id], head, j) for s in fine], 0.0, 1.0)
        gt = np.array([s.scores[dim] for s in fine])
        per_target[dim.value] = _row(pred, gt)

    return MetricsReport(
        head=head, n=len(samples), per_target=per_target, config=dict(config or {})
    )


def report_to_json(report: MetricsReport) -> dict:
    return {
        "head": report.head,
        "n": report.n,
        "level_source": report.level_source,
        "config": report.config,
        "per_target": report.per_target,
    }


def report_from_json(doc: dict) -> MetricsReport:
    return MetricsReport(
        head=doc["head"],
        n=doc["n"],
        per_target=doc["per_target"],
        level_source=doc.get("level_source", ""),
        config=doc.get("config", {}),
    )


def write_reports_json(path: str | Path, reports: Sequence[MetricsReport], config: dict) -> None:
    doc = {"config": config, "heads": {r.head: report_to_json(r) for r in reports}}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


_COLUMN_LABELS = {
    "overall": "OVERALL",
    "facial_brightness": "bright",
    "facial_feature_clarity": "featclr",
    "facial_skin_tone": "skin",
    "facial_structure": "struct",
    "facial_contour_clarity": "contour",
    "facial_aesthetic": "FACIAL",
    "outfit": "outfit",
    "body_shape": "body",
    "looks": "looks",
    "general_appearance_aesthetic": "GENAPP",
    "environment": "env",
}

# Table layout: facial leaves + facial parent | appearance leaves + parent
# | environment | overall.
_COLUMN_ORDER = (
    "facial_brightness",
    "facial_feature_clarity",
    "facial_skin_tone",
    "facial_structure",
    "facial_contour_clarity",
    "facial_aesthetic",
    "outfit",
    "body_shape",
    "looks",
    "general_appearance_aesthetic",
    "environment",
    "overall",
)

_GROUP_BREAKS = {"outfit", "environment", "overall"}


def _fmt(value: float | int | None) -> str:
    if value is None:
        return "undef"
    if isinstance(value, int):
        return str(value)
    return f"{value:.4f}"


def render_report_text(report: MetricsReport) -> str:
    """Fixed-width table: metric rows by dimension columns, grouped."""
    width = 9
    lines = [f"head={report.head}  samples={report.n}"]
    header = "metric".ljust(16)
    for name in _COLUMN_ORDER:
        if name in _GROUP_BREAKS:
            header += "| "
        header += _COLUMN_LABELS[name].rjust(width - 2) + "  "
    lines.append(header.rstrip())
    lines.append("-" * len(header.rstrip()))
    for metric in ("n",) + METRIC_NAMES:
        line = metric.ljust(16)
        for name in _COLUMN_ORDER:
            if name in _GROUP_BREAKS:
                line += "| "
            line += _fmt(report.per_target[name].get(metric)).rjust(width - 2) + "  "
        lines.append(line.rstrip())
    return "\n".join(lines) + "\n"


def render_reports_text(reports: Sequence[MetricsReport]) -> str:
    return "\n".join(render_report_text(r) for r in reports)
