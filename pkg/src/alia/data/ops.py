"""Distribution accounting, matched sampling, and augmented-set assembly."""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Iterable, Mapping, Sequence

from alia.data.records import ClassDistribution, Dataset, ImageRecord, SPLITS
from alia.errors import IntegrityError, PreconditionError, ShortageError
from alia.rng import choose_without_replacement, derive_seed

log = logging.getLogger(__name__)

# Practice, not a constraint: expansion ratios observed in real runs sit
# between 20% and 100% of the original training set.
EXPANSION_WARN_LOW = 0.20
EXPANSION_WARN_HIGH = 1.00


def class_distribution(dataset: Dataset, split: str) -> ClassDistribution:
    """Per-class record counts for one split; absent classes count 0."""
    if split not in SPLITS:
        raise PreconditionError(f"unknown split {split!r}")
    counts = {cls: 0 for cls in dataset.classes}
    for rec in dataset.records:
        if rec.split == split:
            counts[rec.label] += 1
    return ClassDistribution(counts)


def sample_to_match(
    pool: Sequence[ImageRecord],
    target: ClassDistribution,
    seed: int,
) -> list[ImageRecord]:
    """Uniform without-replacement sample matching the target class counts.

    Deterministic for a fixed seed; within each class the pool's relative
    order is preserved. Raises ShortageError listing every deficient class.
    """
    by_class: dict[str, list[ImageRecord]] = defaultdict(list)
    for rec in pool:
        by_class[rec.label].append(rec)

    deficits = {
        cls: want - len(by_class.get(cls, []))
        for cls, want in target.items()
        if want > len(by_class.get(cls, []))
    }
    if deficits:
        raise ShortageError(deficits)

    chosen: list[ImageRecord] = []
    for cls in sorted(target.counts):
        want = target[cls]
        if want == 0:
            continue
        members = by_class[cls]
        idx = choose_without_replacement(
            derive_seed(seed, "sample_to_match", cls), len(members), want
        )
        chosen.extend(members[i] for i in idx)
    return chosen


def merge_augmented(train: Dataset, augmented: Iterable[ImageRecord]) -> Dataset:
    """New dataset = train plus augmented records re-homed into the train split.

    Inputs are never mutated. Warns when the expansion ratio falls outside
    [0.20, 1.00]; the bounds describe normal practice, they are not errors.
    """
    added = list(augmented)
    for rec in added:
        if rec.provenance not in ("edited", "txt2img", "real-extra"):
            raise PreconditionError(
                f"augmented record {rec.id} has provenance {rec.provenance!r}; "
                "expected edited, txt2img, or real-extra"
            )

    existing = {r.id for r in train.records}
    for rec in added:
        if rec.id in existing:
            raise IntegrityError(f"augmented record id collides with train: {rec.id}")
        existing.add(rec.id)

    base = sum(1 for r in train.records if r.split == "train") or len(train.records)
    ratio = len(added) / base if base else 0.0
    if not (EXPANSION_WARN_LOW <= ratio <= EXPANSION_WARN_HIGH):
        log.warning(
            "expansion ratio %.2f outside [%.2f, %.2f] (train=%d, added=%d)",
            ratio, EXPANSION_WARN_LOW, EXPANSION_WARN_HIGH, base, len(added),
        )

    merged = tuple(train.records) + tuple(r.with_split("train") for r in added)
    return Dataset(records=merged, classes=train.classes, superclass=train.superclass)


def build_bias_split(
    pool: Dataset,
    spec: Mapping[str, Mapping[str, int]],
    seed: int,
    tag_key: str = "background",
) -> Dataset:
    """Training split with exact per-(class, domain) counts.

    ``spec`` maps class -> domain value -> count, where the domain value is
    read from each record's ``domain_tags[tag_key]``. Deterministic per seed.
    """
    cells: dict[tuple[str, str], list[ImageRecord]] = defaultdict(list)
    for rec in pool.records:
        if rec.domain_tags and tag_key in rec.domain_tags:
            cells[(rec.label, rec.domain_tags[tag_key])].append(rec)

    deficits: dict[str, int] = {}
    for cls, domains in spec.items():
        for domain, want in domains.items():
            have = len(cells.get((cls, domain), []))
            if want > have:
                deficits[f"{cls}/{domain}"] = want - have
    if deficits:
        raise ShortageError(deficits)

    chosen: list[ImageRecord] = []
    for cls in sorted(spec):
        for domain in sorted(spec[cls]):
            want = spec[cls][domain]
            if want == 0:
                continue
            members = cells[(cls, domain)]
            idx = choose_without_replacement(
                derive_seed(seed, "bias_split", cls, domain), len(members), want
            )
            chosen.extend(members[i].with_split("train") for i in idx)

    return Dataset(records=tuple(chosen), classes=pool.classes, superclass=pool.superclass)
