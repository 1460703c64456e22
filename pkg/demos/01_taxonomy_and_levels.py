"""Tour of the aesthetic hierarchy and the score <-> rating-level mapping.

Run: python demos/01_taxonomy_and_levels.py
"""

from hiaa import (
    CANONICAL_ORDER,
    Dimension,
    RatingLevel,
    children,
    parent_of,
    rating_from_score,
    score_from_rating,
)

print("The twelve aesthetic dimensions, in canonical order:")
for i, dim in enumerate(CANONICAL_ORDER):
    parent = parent_of(dim)
    parent_txt = f"-> {parent.value}" if parent else "(root)"
    print(f"  {i:2d}. {dim.value:30s} [{dim.kind:6s}] {parent_txt}")

print("\nThe hierarchy bottom-up: parents see only their children's scores.")
for parent in (Dimension.FACIAL_AESTHETIC, Dimension.GENERAL_APPEARANCE_AESTHETIC,
               Dimension.OVERALL_AESTHETIC):
    kids = ", ".join(c.value for c in children(parent))
    print(f"  {parent.value} <- {kids}")

print("\nScores in [0,1] map onto five equal-width rating levels:")
for s in (0.0, 0.07, 0.2, 0.35, 0.5, 0.61, 0.8, 0.93, 1.0):
    print(f"  score {s:4.2f} -> {rating_from_score(s).word}")

print("\nLevel midpoints (used for display):")
for level in RatingLevel:
    print(f"  {level.word:9s} (code {int(level)}) -> midpoint {score_from_rating(level):0.1f}")

print("\nUniform scores land in each level about 20% of the time:")
import numpy as np

rng = np.random.default_rng(0)
draws = [rating_from_score(float(x)) for x in rng.uniform(0, 1, 20000)]
for level in RatingLevel:
    share = sum(1 for d in draws if d is level) / len(draws)
    print(f"  {level.word:9s} {share:.3f}")
