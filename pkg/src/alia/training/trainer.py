"""Trainer backends.

The centroid probe is the desk-scale stand-in for real fine-tuning: fully
deterministic for a fixed seed, cheap on one CPU core, and honest enough that
augmentation actually moves its decision boundaries. Real accelerator-backed
trainers plug in behind the same protocol. The planted stubs exist for tests
that need a known ground-truth response surface.
"""

from __future__ import annotations

from typing import Callable, Protocol, Sequence

import numpy as np

from alia.data.records import Dataset, ImageRecord
from alia.errors import PreconditionError
from alia.filtering.interfaces import MeanPoolEmbedder
from alia.ids import content_hash
from alia.rng import derive_seed, generator
from alia.training.config import TrainConfig
from alia.training.metrics import balanced_accuracy


class TrainerBackend(Protocol):
    def fit(
        self,
        config: TrainConfig,
        dataset: Dataset,
        loader: Callable[[ImageRecord], np.ndarray],
        policy=None,
    ) -> tuple[object, float]: ...

    def predict(self, model, images: Sequence[np.ndarray]) -> np.ndarray: ...


class CentroidTrainer:
    """Nearest-centroid probe on mean-pooled pixel features.

    Fitting computes per-class feature centroids (policy-transformed when an
    in-training augmentation policy is supplied) plus a seed-keyed jitter that
    models run-to-run variance; prediction is a softmax over negative squared
    distances. The validation metric is balanced accuracy on the val split.
    """

    def __init__(self, grid: int = 4, jitter: float = 0.01, temperature: float | None = None):
        self.embedder = MeanPoolEmbedder(grid=grid)
        self.jitter = jitter
        self.temperature = temperature

    def fit(self, config, dataset, loader, policy=None):
        train = dataset.split_records("train")
        if not train:
            raise PreconditionError("no train records")
        rng = generator(derive_seed(config.seed, "centroid-fit"))

        images = [loader(rec) for rec in train]
        labels = [rec.label for rec in train]
        if policy is not None:
            weighted = policy.apply(images, labels, rng)
        else:
            weighted = [(img, [(label, 1.0)]) for img, label in zip(images, labels)]

        dim = self.embedder.embed(images[0]).shape[0]
        sums = {c: np.zeros(dim) for c in dataset.classes}
        weights = {c: 0.0 for c in dataset.classes}
        for img, assignment in weighted:
            feat = self.embedder.embed(img)
            for label, w in assignment:
                sums[label] += w * feat
                weights[label] += w

        centroids = np.stack([
            sums[c] / weights[c] if weights[c] > 0 else np.zeros(dim)
            for c in dataset.classes
        ])
        centroids = centroids + rng.normal(0, self.jitter * 255, size=centroids.shape)
        scale = self.temperature or float(np.mean(np.abs(centroids)) + 1e-9)
        model = {"classes": tuple(dataset.classes), "centroids": centroids, "scale": scale}

        val = dataset.split_records("val")
        val_metric = 0.0
        if val:
            probs = self.predict(model, [loader(r) for r in val])
            y_pred = [dataset.classes[int(i)] for i in probs.argmax(axis=1)]
            val_metric, _ = balanced_accuracy(
                [r.label for r in val], y_pred, dataset.classes
            )
        return model, val_metric

    def predict(self, model, images):
        feats = np.stack([self.embedder.embed(img) for img in images])
        diffs = feats[:, None, :] - model["centroids"][None, :, :]
        logits = -np.sqrt((diffs**2).sum(axis=2)) / model["scale"]
        logits -= logits.max(axis=1, keepdims=True)
        exp = np.exp(logits)
        return exp / exp.sum(axis=1, keepdims=True)


class TrainedTaskClassifier:
    """Adapts a fitted trainer model to the filtering TaskClassifier interface."""

    def __init__(self, trainer: TrainerBackend, model):
        self.trainer = trainer
        self.model = model

    def softmax(self, image: np.ndarray) -> np.ndarray:
        return np.asarray(self.trainer.predict(self.model, [image]))[0]


class PlantedSurfaceTrainer:
    """Stub whose validation metric is an exact function of (lr, wd)."""

    def __init__(self, surface: Callable[[float, float], float], n_classes: int = 2):
        self.surface = surface
        self.n_classes = n_classes
        self.fit_calls: list[tuple[float, float]] = []

    def fit(self, config, dataset, loader, policy=None):
        self.fit_calls.append((config.learning_rate, config.weight_decay))
        return {"classes": tuple(dataset.classes)}, float(
            self.surface(config.learning_rate, config.weight_decay)
        )

    def predict(self, model, images):
        k = len(model["classes"])
        return np.full((len(images), k), 1.0 / k)


class PlantedAccuracyTrainer:
    """Stub whose per-class recall tracks a planted response of train-set size.

    At fit time the stub plans, per split and class, which images it will
    predict correctly so that recall approximates ``response(n_train)`` as
    closely as per-class quantization allows. Prediction is a lookup by image
    content hash, so evaluation through the ordinary metric path recovers the
    planted curve.
    """

    def __init__(self, response: Callable[[int], float]):
        self.response = response

    def fit(self, config, dataset, loader, policy=None):
        n_train = len(dataset.split_records("train"))
        accuracy = min(1.0, max(0.0, float(self.response(n_train))))
        classes = tuple(dataset.classes)
        assignments: dict[str, int] = {}
        for split in ("train", "val", "test"):
            by_class: dict[str, list[ImageRecord]] = {}
            for rec in dataset.split_records(split):
                by_class.setdefault(rec.label, []).append(rec)
            for label, members in by_class.items():
                members = sorted(members, key=lambda r: r.id)
                correct = round(accuracy * len(members))
                label_idx = classes.index(label)
                wrong_idx = (label_idx + 1) % len(classes)
                for i, rec in enumerate(members):
                    digest = content_hash(
                        np.ascontiguousarray(loader(rec)).tobytes()
                    )
                    assignments[digest] = label_idx if i < correct else wrong_idx
        return {
            "classes": classes,
            "assignments": assignments,
            "accuracy": accuracy,
        }, accuracy

    def predict(self, model, images):
        k = len(model["classes"])
        out = np.zeros((len(images), k))
        for row, image in enumerate(images):
            digest = content_hash(np.ascontiguousarray(image).tobytes())
            idx = model["assignments"].get(digest, 0)
            out[row] = 0.1 / (k - 1) if k > 1 else 0.0
            out[row, idx] = 0.9 if k > 1 else 1.0
        return out


class FailingTrainer:
    """Test double that fails on configured (lr, wd) grid points."""

    def __init__(self, inner: TrainerBackend, fail_on: set[tuple[float, float]]):
        self.inner = inner
        self.fail_on = fail_on

    def fit(self, config, dataset, loader, policy=None):
        if (config.learning_rate, config.weight_decay) in self.fail_on:
            raise RuntimeError("synthetic trainer failure")
        return self.inner.fit(config, dataset, loader, policy)

    def predict(self, model, images):
        return self.inner.predict(model, images)
