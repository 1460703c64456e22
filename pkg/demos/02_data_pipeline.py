"""The dataset pipeline end to end, on a small synthetic corpus.

Raw annotation records (per-rater scores or native-scale overall scores)
are normalized into scored samples, rendered as rating-level QA pairs,
and split per source into train/test.

Run: python demos/02_data_pipeline.py
"""

from collections import Counter

from hiaa import build_samples, generate_records, make_qa, parse_answer, split_dataset
from hiaa.datapipe import OVERALL

records = generate_records(n=300, seed=42)  # default: ~54% overall-only
manual = [r for r in records if r.is_manual]
source = [r for r in records if not r.is_manual]
print(f"generated {len(records)} records: {len(manual)} twelve-dimension (9 raters each), "
      f"{len(source)} overall-only from fake source datasets")

by_source = Counter(r.source for r in source)
print("raw overall scores arrive on each source's native scale:")
for name, count in sorted(by_source.items()):
    raws = [r.raw_overall for r in source if r.source == name]
    print(f"  {name}: n={count}, raw range [{min(raws):7.2f}, {max(raws):7.2f}]")

samples = build_samples(records)
print("\nafter ingestion every score lives in [0,1] (per-source min-max, rater means):")
for name in sorted(by_source):
    vals = [s.scores[OVERALL] for s in samples if s.source == name]
    print(f"  {name}: normalized range [{min(vals):.3f}, {max(vals):.3f}]")

fine = next(s for s in samples if s.f == 1)
print(f"\na twelve-dimension sample ({fine.sample_id}) becomes a QA pair:")
qa = make_qa(fine, paraphrase_index=2)
print(f"  Q: {qa.question}")
for line in qa.answer.split("\n")[:4]:
    print(f"  A: {line}")
print("     ...")
assert parse_answer(qa.answer) == qa.slot_levels  # answers parse back exactly

coarse = next(s for s in samples if s.f == 0)
print(f"\nan overall-only sample ({coarse.sample_id}):")
qa = make_qa(coarse, paraphrase_index=0)
print(f"  Q: {qa.question}")
print(f"  A: {qa.answer}")

train, test = split_dataset(samples, test_fraction_per_source=0.1334, seed=7)
print(f"\nseeded per-source split: {len(train)} train / {len(test)} test")
for name in sorted({s.source for s in samples}):
    n_train = sum(1 for s in train if s.source == name)
    n_test = sum(1 for s in test if s.source == name)
    print(f"  {name:9s} {n_train:3d} train / {n_test:2d} test")
