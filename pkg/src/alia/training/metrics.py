"""Evaluation metrics and per-seed report aggregation.

Macro F1 is the unweighted mean of per-class F1 scores; balanced accuracy is
the unweighted mean of per-class recalls. Classes with no test instances are
excluded from the macro average with a logged diagnostic. Reported std is the
population standard deviation of the per-seed values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from alia.data.records import Dataset, ImageRecord
from alia.errors import PreconditionError

log = logging.getLogger(__name__)

METRIC_KINDS = ("macro-F1", "class-balanced accuracy")


def _per_class_counts(
    y_true: Sequence[str], y_pred: Sequence[str], classes: Sequence[str]
) -> dict[str, dict[str, int]]:
    counts = {c: {"tp": 0, "fp": 0, "fn": 0, "support": 0} for c in classes}
    for truth, pred in zip(y_true, y_pred):
        counts[truth]["support"] += 1
        if truth == pred:
            counts[truth]["tp"] += 1
        else:
            counts[truth]["fn"] += 1
            counts[pred]["fp"] += 1
    return counts


def macro_f1(
    y_true: Sequence[str], y_pred: Sequence[str], classes: Sequence[str]
) -> tuple[float, dict[str, float]]:
    """Unweighted mean of per-class F1; zero-denominator F1 counts as 0."""
    counts = _per_class_counts(y_true, y_pred, classes)
    per_class: dict[str, float] = {}
    for cls in classes:
        c = counts[cls]
        if c["support"] == 0:
            log.warning("class %r absent from test split, excluded from macro-F1", cls)
            continue
        precision = c["tp"] / (c["tp"] + c["fp"]) if (c["tp"] + c["fp"]) else 0.0
        recall = c["tp"] / (c["tp"] + c["fn"])
        f1 = (
            2 * precision * recall / (precision + recall)
            if (precision + recall) > 0
            else 0.0
        )
        per_class[cls] = f1
    if not per_class:
        raise PreconditionError("no classes present in the evaluation split")
    return sum(per_class.values()) / len(per_class), per_class


def balanced_accuracy(
    y_true: Sequence[str], y_pred: Sequence[str], classes: Sequence[str]
) -> tuple[float, dict[str, float]]:
    """Unweighted mean of per-class recall over classes present in the split."""
    counts = _per_class_counts(y_true, y_pred, classes)
    per_class: dict[str, float] = {}
    for cls in classes:
        c = counts[cls]
        if c["support"] == 0:
            log.warning("class %r absent from test split, excluded from accuracy", cls)
            continue
        per_class[cls] = c["tp"] / c["support"]
    if not per_class:
        raise PreconditionError("no classes present in the evaluation split")
    return sum(per_class.values()) / len(per_class), per_class


_METRICS: dict[str, Callable] = {
    "macro-F1": macro_f1,
    "class-balanced accuracy": balanced_accuracy,
}


@dataclass(frozen=True)
class MetricReport:
    kind: str
    mean: float
    std: float
    per_seed: tuple[float, ...]
    per_class: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_seeds(
        cls,
        kind: str,
        values: Sequence[float],
        per_class_runs: Sequence[dict[str, float]] = (),
    ) -> "MetricReport":
        values = tuple(float(v) for v in values)
        mean = sum(values) / len(values)
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
        per_class: dict[str, float] = {}
        if per_class_runs:
            keys = per_class_runs[0].keys()
            per_class = {
                k: sum(run[k] for run in per_class_runs) / len(per_class_runs)
                for k in keys
            }
        return cls(kind=kind, mean=mean, std=std, per_seed=values, per_class=per_class)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "mean": self.mean,
            "std": self.std,
            "per_seed": list(self.per_seed),
            "per_class": dict(self.per_class),
        }


def evaluate(
    trainer,
    model,
    dataset: Dataset,
    metric_kind: str,
    loader: Callable[[ImageRecord], np.ndarray],
    split: str = "test",
) -> MetricReport:
    """Score one trained model on a held-out split."""
    if metric_kind not in _METRICS:
        raise PreconditionError(f"unknown metric kind {metric_kind!r}")
    records = dataset.split_records(split)
    if not records:
        raise PreconditionError(f"{split} split is empty")
    images = [loader(rec) for rec in records]
    probs = np.asarray(trainer.predict(model, images))
    if probs.shape != (len(records), len(dataset.classes)):
        raise PreconditionError(
            f"model predictions have shape {probs.shape}, expected "
            f"({len(records)}, {len(dataset.classes)})"
        )
    y_true = [rec.label for rec in records]
    y_pred = [dataset.classes[int(i)] for i in probs.argmax(axis=1)]
    value, per_class = _METRICS[metric_kind](y_true, y_pred, dataset.classes)
    return MetricReport(
        kind=metric_kind, mean=value, std=0.0, per_seed=(value,), per_class=per_class
    )
