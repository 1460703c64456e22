"""The twelve-dimension aesthetic hierarchy and the five rating levels.

The hierarchy is fixed: nine leaf dimensions feed two parent dimensions
(facial and general appearance), and those two plus the environment leaf
feed the overall root. Scores live in [0, 1] and map onto five rating
levels by equal-width intervals.
"""

from __future__ import annotations

import math
from enum import Enum, IntEnum

from .exceptions import OutOfRange


class Dimension(Enum):
    """One node of the aesthetic hierarchy, in canonical (A-L) order."""

    FACIAL_BRIGHTNESS = "facial_brightness"
    FACIAL_FEATURE_CLARITY = "facial_feature_clarity"
    FACIAL_SKIN_TONE = "facial_skin_tone"
    FACIAL_STRUCTURE = "facial_structure"
    FACIAL_CONTOUR_CLARITY = "facial_contour_clarity"
    FACIAL_AESTHETIC = "facial_aesthetic"
    OUTFIT = "outfit"
    BODY_SHAPE = "body_shape"
    LOOKS = "looks"
    GENERAL_APPEARANCE_AESTHETIC = "general_appearance_aesthetic"
    ENVIRONMENT = "environment"
    OVERALL_AESTHETIC = "overall_aesthetic"

    @property
    def kind(self) -> str:
        """``"leaf"``, ``"parent"``, or ``"root"``."""
        if self is Dimension.OVERALL_AESTHETIC:
            return "root"
        if self in _CHILDREN:
            return "parent"
        return "leaf"

    @property
    def display_name(self) -> str:
        """Human-readable form, e.g. ``"Facial Skin Tone"``."""
        return self.value.replace("_", " ").title()


# Canonical index 0..11; this order is used everywhere a dimension list or
# array appears (answer slots, expert-head outputs, report columns).
CANONICAL_ORDER: tuple[Dimension, ...] = tuple(Dimension)

CANONICAL_INDEX: dict[Dimension, int] = {d: i for i, d in enumerate(CANONICAL_ORDER)}

_CHILDREN: dict[Dimension, tuple[Dimension, ...]] = {
    Dimension.FACIAL_AESTHETIC: (
        Dimension.FACIAL_BRIGHTNESS,
        Dimension.FACIAL_FEATURE_CLARITY,
        Dimension.FACIAL_SKIN_TONE,
        Dimension.FACIAL_STRUCTURE,
        Dimension.FACIAL_CONTOUR_CLARITY,
    ),
    Dimension.GENERAL_APPEARANCE_AESTHETIC: (
        Dimension.OUTFIT,
        Dimension.BODY_SHAPE,
        Dimension.LOOKS,
    ),
    Dimension.OVERALL_AESTHETIC: (
        Dimension.FACIAL_AESTHETIC,
        Dimension.GENERAL_APPEARANCE_AESTHETIC,
        Dimension.ENVIRONMENT,
    ),
}

_PARENT: dict[Dimension, Dimension] = {
    child: parent for parent, kids in _CHILDREN.items() for child in kids
}

# The nine leaves in canonical order (the A-L order restricted to leaves).
LEAF_ORDER: tuple[Dimension, ...] = tuple(
    d for d in CANONICAL_ORDER if d.kind == "leaf"
)

LEAVES = frozenset(LEAF_ORDER)


def children(dim: Dimension) -> list[Dimension]:
    """Return the fixed child list of ``dim``; empty for leaves."""
    return list(_CHILDREN.get(dim, ()))


def parent_of(dim: Dimension) -> Dimension | None:
    """Return the unique parent of ``dim``, or None for the root."""
    return _PARENT.get(dim)


class RatingLevel(IntEnum):
    """Five quality levels with fixed integer codes 1..5."""

    BAD = 1
    POOR = 2
    FAIR = 3
    GOOD = 4
    EXCELLENT = 5

    @property
    def word(self) -> str:
        """Lowercase serialized form, e.g. ``"fair"``."""
        return self.name.lower()

    @classmethod
    def from_word(cls, word: str) -> "RatingLevel":
        try:
            return cls[word.upper()]
        except KeyError:
            raise OutOfRange(f"unknown rating level word: {word!r}") from None


def rating_from_score(score: float) -> RatingLevel:
    """Map a score in [0, 1] to its rating level.

    Level z covers the interval ((z-1)/5, z/5]; a score of exactly 0 is
    assigned to the lowest level so the mapping is total on [0, 1].
    """
    if not 0.0 <= score <= 1.0:
        raise OutOfRange(f"score {score!r} outside [0, 1]")
    if score == 0.0:
        return RatingLevel.BAD
    return RatingLevel(math.ceil(score * 5))


def score_from_rating(level: RatingLevel) -> float:
    """Midpoint of a rating level's score interval: (2z - 1)/10."""
    return (2 * int(level) - 1) / 10.0
