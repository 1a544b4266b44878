"""Per-class confidence thresholds from the original training set."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from alia.data.records import Dataset, ImageRecord
from alia.errors import MissingClassError
from alia.filtering.interfaces import TaskClassifier


@dataclass(frozen=True)
class ThresholdTable:
    """Class label -> confidence threshold, with the supporting image counts."""

    t: dict[str, float]
    support: dict[str, int]

    def __getitem__(self, label: str) -> float:
        return self.t[label]

    def to_dict(self) -> dict:
        return {"t": dict(self.t), "support": dict(self.support)}

    @classmethod
    def from_dict(cls, data: dict) -> "ThresholdTable":
        return cls(t=dict(data["t"]), support=dict(data["support"]))


def compute_class_thresholds(
    classifier: TaskClassifier,
    train: Dataset,
    loader: Callable[[ImageRecord], np.ndarray],
) -> ThresholdTable:
    """t_y = mean correct-label softmax over the train images of class y.

    Every dataset class needs at least one train image; the mean is a plain
    arithmetic mean of softmax(x)[y].
    """
    index = {label: i for i, label in enumerate(train.classes)}
    sums = {label: 0.0 for label in train.classes}
    counts = {label: 0 for label in train.classes}
    for rec in train.split_records("train"):
        probs = np.asarray(classifier.softmax(loader(rec)), dtype=np.float64)
        sums[rec.label] += float(probs[index[rec.label]])
        counts[rec.label] += 1

    missing = [label for label, n in counts.items() if n == 0]
    if missing:
        raise MissingClassError(
            f"classes with no train images: {', '.join(sorted(missing))}"
        )
    t = {label: sums[label] / counts[label] for label in train.classes}
    return ThresholdTable(t=t, support=counts)
