"""Dataset pipeline: ingestion, normalization, MOS aggregation, QA pair
generation, and seeded train/test splitting.

Records arrive as newline-delimited JSON, one annotation record per line.
Manual records carry per-rater scores for all 12 dimensions; records taken
from a source dataset carry one raw overall score on that source's native
scale. Ingestion min-max normalizes each source group independently and
averages raters into per-dimension mean opinion scores, producing scored
samples with an annotation-type flag ``f`` (0 = overall only, 1 = twelve
dimensional).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import (
    BadFraction,
    BadFlag,
    CorruptFile,
    DegenerateRange,
    EmptyRaterList,
    IndexOutOfRange,
    OutOfRange,
    TooFewValues,
)
from .taxonomy import (
    CANONICAL_ORDER,
    Dimension,
    RatingLevel,
    rating_from_score,
)

OVERALL = Dimension.OVERALL_AESTHETIC


@dataclass(frozen=True)
class AnnotationRecord:
    """One image's raw annotations.

    Exactly one of ``rater_scores`` (manual record: dimension -> per-rater
    scores in [0, 1]) and ``raw_overall`` (source-dataset record: one score
    on the source's native scale) is set.
    """

    sample_id: str
    source: str
    feature_seed: int
    rater_scores: dict[Dimension, tuple[float, ...]] | None = None
    raw_overall: float | None = None

    @property
    def is_manual(self) -> bool:
        return self.rater_scores is not None

    def __post_init__(self):
        if (self.rater_scores is None) == (self.raw_overall is None):
            raise BadFlag(
                f"record {self.sample_id!r} must carry rater_scores xor raw_overall"
            )
        if self.rater_scores is not None:
            missing = [d for d in CANONICAL_ORDER if d not in self.rater_scores]
            if missing:
                raise TooFewValues(
                    f"record {self.sample_id!r} lacks dimensions: "
                    + ", ".join(d.value for d in missing)
                )
            for dim, scores in self.rater_scores.items():
                if len(scores) < 9:
                    raise TooFewValues(
                        f"record {self.sample_id!r} dimension {dim.value} has "
                        f"{len(scores)} raters, need >= 9"
                    )
                for s in scores:
                    if not 0.0 <= s <= 1.0:
                        raise OutOfRange(
                            f"record {self.sample_id!r} rater score {s!r} outside [0, 1]"
                        )


@dataclass(frozen=True)
class ScoredSample:
    """A normalized training/eval record.

    ``f`` = 0 means only the overall score is present; ``f`` = 1 means all
    12 dimensions are scored. ``levels`` always mirrors ``scores`` through
    the rating-level mapping.
    """

    sample_id: str
    source: str
    f: int
    scores: dict[Dimension, float]
    levels: dict[Dimension, RatingLevel]
    feature_seed: int


def make_scored_sample(
    sample_id: str,
    source: str,
    f: int,
    scores: Mapping[Dimension, float],
    feature_seed: int,
) -> ScoredSample:
    """Build a sample, deriving rating levels from the scores."""
    if f not in (0, 1):
        raise BadFlag(f"f must be 0 or 1, got {f!r}")
    expected = {OVERALL} if f == 0 else set(CANONICAL_ORDER)
    if set(scores) != expected:
        raise BadFlag(
            f"sample {sample_id!r} with f={f} has dimensions "
            f"{sorted(d.value for d in scores)}"
        )
    scores = {d: float(scores[d]) for d in CANONICAL_ORDER if d in scores}
    levels = {d: rating_from_score(s) for d, s in scores.items()}
    return ScoredSample(sample_id, source, f, scores, levels, feature_seed)


@dataclass(frozen=True)
class QAPair:
    sample_id: str
    question: str
    answer: str
    slot_levels: tuple[tuple[Dimension, RatingLevel], ...]


# ------------------------------------------------------------- operations


def minmax_normalize(raw: Sequence[float]) -> list[float]:
    """Affine map onto [0, 1]: (x - min) / (max - min)."""
    if len(raw) < 2:
        raise TooFewValues(f"need >= 2 values to normalize, got {len(raw)}")
    lo, hi = min(raw), max(raw)
    if hi == lo:
        raise DegenerateRange(f"all {len(raw)} values equal {lo!r}")
    span = hi - lo
    return [(x - lo) / span for x in raw]


def aggregate_mos(rater_scores: Sequence[float]) -> float:
    """Mean opinion score: the arithmetic mean of the raters' scores."""
    if len(rater_scores) == 0:
        raise EmptyRaterList("no rater scores to aggregate")
    for s in rater_scores:
        if not 0.0 <= s <= 1.0:
            raise OutOfRange(f"rater score {s!r} outside [0, 1]")
    return float(sum(rater_scores) / len(rater_scores))


def build_samples(records: Sequence[AnnotationRecord]) -> list[ScoredSample]:
    """Turn raw records into scored samples.

    Source-dataset records are min-max normalized per source tag
    (independently, so one source's extremes never affect another's);
    manual records aggregate raters into per-dimension MOS. Output order
    follows input order.
    """
    by_source: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        if not rec.is_manual:
            by_source.setdefault(rec.source, []).append(i)

    normalized: dict[int, float] = {}
    for source, indices in by_source.items():
        raw = [records[i].raw_overall for i in indices]
        try:
            values = minmax_normalize(raw)
        except (DegenerateRange, TooFewValues) as exc:
            raise type(exc)(f"source {source!r}: {exc}") from None
        normalized.update(zip(indices, values))

    samples = []
    for i, rec in enumerate(records):
        if rec.is_manual:
            scores = {d: aggregate_mos(rs) for d, rs in rec.rater_scores.items()}
            samples.append(
                make_scored_sample(rec.sample_id, rec.source, 1, scores, rec.feature_seed)
            )
        else:
            samples.append(
                make_scored_sample(
                    rec.sample_id, rec.source, 0, {OVERALL: normalized[i]}, rec.feature_seed
                )
            )
    return samples


# Paraphrase pools written for this artifact; selection is by explicit index.
OVERALL_QUESTIONS = (
    "How would you rate the aesthetics of this person's photo?",
    "Please give an overall aesthetic rating for this human image.",
    "What is your aesthetic judgment of this picture of a person?",
    "Judge the overall visual appeal of this human photograph.",
    "How aesthetically pleasing is this image of a person?",
    "Give one overall quality rating for the aesthetics of this human photo.",
    "Assess the overall aesthetics of the person shown in this image.",
    "What overall aesthetic level would you assign to this human picture?",
)

TWELVE_DIM_QUESTIONS = (
    "Could you rate this human image on each of the twelve aesthetic dimensions?",
    "Please assess the person's photo across all twelve aesthetic dimensions.",
    "Give a rating for every one of the twelve aesthetic dimensions of this image.",
    "How does this human picture score on the twelve aesthetic dimensions?",
    "Evaluate this photograph dimension by dimension across the twelve aesthetic criteria.",
    "Provide twelve-dimension aesthetic ratings for this image of a person.",
    "Rate each of the twelve aesthetic dimensions for the person in this photo.",
    "What are the ratings of this human image along the twelve aesthetic dimensions?",
)

_OVERALL_ANSWER_TEMPLATE = "The aesthetics of the image is {level}."


def render_answer(slot_levels: Sequence[tuple[Dimension, RatingLevel]]) -> str:
    """Deterministic answer text for the given (dimension, level) slots."""
    if len(slot_levels) == 1:
        return _OVERALL_ANSWER_TEMPLATE.format(level=slot_levels[0][1].word)
    return "\n".join(f"{dim.display_name}: {level.word}" for dim, level in slot_levels)


def parse_answer(answer: str) -> tuple[tuple[Dimension, RatingLevel], ...]:
    """Inverse of :func:`render_answer`."""
    if answer.startswith("The aesthetics of the image is "):
        word = answer[len("The aesthetics of the image is ") : ].rstrip(".")
        return ((OVERALL, RatingLevel.from_word(word)),)
    slots = []
    for line in answer.split("\n"):
        name, _, word = line.partition(": ")
        dim = Dimension(name.lower().replace(" ", "_"))
        slots.append((dim, RatingLevel.from_word(word)))
    return tuple(slots)


def make_qa(sample: ScoredSample, paraphrase_index: int) -> QAPair:
    """Render the sample's question/answer pair.

    ``paraphrase_index`` addresses the question pool matching the sample's
    annotation type; the answer is fully determined by the sample's levels.
    """
    pool = OVERALL_QUESTIONS if sample.f == 0 else TWELVE_DIM_QUESTIONS
    if not 0 <= paraphrase_index < len(pool):
        raise IndexOutOfRange(
            f"paraphrase index {paraphrase_index} outside 0..{len(pool) - 1}"
        )
    if sample.f == 0:
        slot_levels = ((OVERALL, sample.levels[OVERALL]),)
    else:
        slot_levels = tuple((d, sample.levels[d]) for d in CANONICAL_ORDER)
    return QAPair(
        sample_id=sample.sample_id,
        question=pool[paraphrase_index],
        answer=render_answer(slot_levels),
        slot_levels=slot_levels,
    )


def split_dataset(
    samples: Sequence[ScoredSample],
    test_fraction_per_source: Mapping[str, float] | float,
    seed: int,
) -> tuple[list[ScoredSample], list[ScoredSample]]:
    """Seeded per-source shuffle-and-split.

    ``test_fraction_per_source`` is either one fraction applied to every
    source or a map source -> fraction (every source present in the data
    must be covered). Per-source test counts are round(fraction * size).
    """
    if len(samples) == 0:
        raise TooFewValues("cannot split an empty sample list")
    sources = sorted({s.source for s in samples})
    if isinstance(test_fraction_per_source, Mapping):
        fractions = dict(test_fraction_per_source)
        missing = [src for src in sources if src not in fractions]
        if missing:
            raise BadFraction(f"no test fraction for source(s): {', '.join(missing)}")
    else:
        fractions = {src: float(test_fraction_per_source) for src in sources}
    for src, frac in fractions.items():
        if not 0.0 < frac < 1.0:
            raise BadFraction(f"fraction for source {src!r} must be in (0, 1), got {frac}")

    rng = np.random.default_rng(seed)
    test_ids: set[str] = set()
    for src in sources:
        group = [s.sample_id for s in samples if s.source == src]
        order = rng.permutation(len(group))
        n_test = round(fractions[src] * len(group))
        test_ids.update(group[i] for i in order[:n_test])
    train = [s for s in samples if s.sample_id not in test_ids]
    test = [s for s in samples if s.sample_id in test_ids]
    return train, test


# ------------------------------------------------------------------- I/O


def record_to_json(rec: AnnotationRecord) -> dict:
    doc = {"sample_id": rec.sample_id, "source": rec.source, "feature_seed": rec.feature_seed}
    if rec.is_manual:
        doc["rater_scores"] = {d.value: list(v) for d, v in rec.rater_scores.items()}
    else:
        doc["raw_overall"] = rec.raw_overall
    return doc


def record_from_json(doc: dict) -> AnnotationRecord:
    rater_scores = None
    if "rater_scores" in doc:
        rater_scores = {
            Dimension(k): tuple(float(x) for x in v)
            for k, v in doc["rater_scores"].items()
        }
    return AnnotationRecord(
        sample_id=doc["sample_id"],
        source=doc["source"],
        feature_seed=int(doc["feature_seed"]),
        rater_scores=rater_scores,
        raw_overall=doc.get("raw_overall"),
    )


def sample_to_json(sample: ScoredSample) -> dict:
    return {
        "sample_id": sample.sample_id,
        "source": sample.source,
        "f": sample.f,
        "scores": {d.value: sample.scores[d] for d in CANONICAL_ORDER if d in sample.scores},
        "levels": {d.value: sample.levels[d].word for d in CANONICAL_ORDER if d in sample.levels},
        "feature_seed": sample.feature_seed,
    }


def sample_from_json(doc: dict) -> ScoredSample:
    scores = {Dimension(k): float(v) for k, v in doc["scores"].items()}
    return make_scored_sample(
        doc["sample_id"], doc["source"], int(doc["f"]), scores, int(doc["feature_seed"])
    )


def qa_to_json(qa: QAPair) -> dict:
    return {
        "sample_id": qa.sample_id,
        "question": qa.question,
        "answer": qa.answer,
        "slot_levels": [[d.value, lvl.word] for d, lvl in qa.slot_levels],
    }


def _read_jsonl(path: str | Path) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptFile(f"{path}:{lineno}: not valid JSON ({exc})") from None


def _write_jsonl(path: str | Path, docs: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc) + "\n")


def read_records_jsonl(path: str | Path) -> list[AnnotationRecord]:
    try:
        return [record_from_json(doc) for doc in _read_jsonl(path)]
    except (KeyError, ValueError) as exc:
        if isinstance(exc, CorruptFile):
            raise
        raise CorruptFile(f"{path}: malformed record ({exc})") from None


def write_records_jsonl(path: str | Path, records: Sequence[AnnotationRecord]) -> None:
    _write_jsonl(path, (record_to_json(r) for r in records))


def read_samples_jsonl(path: str | Path) -> list[ScoredSample]:
    try:
        return [sample_from_json(doc) for doc in _read_jsonl(path)]
    except (KeyError, ValueError) as exc:
        if isinstance(exc, CorruptFile):
            raise
        raise CorruptFile(f"{path}: malformed sample ({exc})") from None


def write_samples_jsonl(path: str | Path, samples: Sequence[ScoredSample]) -> None:
    _write_jsonl(path, (sample_to_json(s) for s in samples))


def write_qa_jsonl(path: str | Path, pairs: Sequence[QAPair]) -> None:
    _write_jsonl(path, (qa_to_json(p) for p in pairs))


def write_split_json(
    path: str | Path,
    train: Sequence[ScoredSample],
    test: Sequence[ScoredSample],
    fractions: Mapping[str, float] | float,
    seed: int,
) -> None:
    doc = {
        "seed": seed,
        "fractions": fractions if isinstance(fractions, (int, float)) else dict(fractions),
        "train": [s.sample_id for s in train],
        "test": [s.sample_id for s in test],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_split_json(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        doc["train"], doc["test"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise CorruptFile(f"{path}: malformed split file ({exc})") from None
    return doc
