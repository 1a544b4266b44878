"""Model interfaces the filters depend on, plus deterministic stand-ins."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from alia.data.records import Dataset, ImageRecord
from alia.errors import PreconditionError
from alia.ids import content_hash


class ZeroShotClassifier(Protocol):
    """Vision-language similarity scorer: one score per prompt, higher means
    the image matches the prompt better."""

    def scores(self, image: np.ndarray, prompts: Sequence[str]) -> list[float]: ...


class TaskClassifier(Protocol):
    """Classifier over the dataset's classes; probabilities sum to one."""

    def softmax(self, image: np.ndarray) -> np.ndarray: ...


class ImageEmbedder(Protocol):
    def embed(self, image: np.ndarray) -> np.ndarray: ...


@dataclass
class EmbeddingIndex:
    """Precomputed train-set embeddings for nearest-neighbor queries."""

    ids: tuple[str, ...]
    labels: tuple[str, ...]
    vectors: np.ndarray

    def nearest(self, vector: np.ndarray) -> tuple[str, str]:
        """Cosine-nearest train image; distance ties break to the lowest id."""
        if len(self.ids) == 0:
            raise PreconditionError("embedding index is empty")
        v = vector / (np.linalg.norm(vector) + 1e-12)
        mat = self.vectors / (np.linalg.norm(self.vectors, axis=1, keepdims=True) + 1e-12)
        distances = 1.0 - mat @ v
        best = distances.min()
        candidates = [i for i in range(len(self.ids)) if distances[i] == best]
        winner = min(candidates, key=lambda i: self.ids[i])
        return self.ids[winner], self.labels[winner]


def build_embedding_index(
    embedder: ImageEmbedder,
    train: Dataset,
    loader: Callable[[ImageRecord], np.ndarray],
) -> EmbeddingIndex:
    records = train.split_records("train")
    if not records:
        raise PreconditionError("no train records to index")
    vectors = np.stack([embedder.embed(loader(rec)) for rec in records])
    return EmbeddingIndex(
        ids=tuple(r.id for r in records),
        labels=tuple(r.label for r in records),
        vectors=vectors,
    )


class MeanPoolEmbedder:
    """Cheap deterministic embedding: mean-pooled grid of pixel intensities."""

    def __init__(self, grid: int = 4):
        self.grid = grid

    def embed(self, image: np.ndarray) -> np.ndarray:
        img = image.astype(np.float64)
        if img.ndim == 2:
            img = img[:, :, None]
        h, w = img.shape[:2]
        gh, gw = max(1, h // self.grid), max(1, w // self.grid)
        cells = []
        for r in range(0, self.grid):
            for c in range(0, self.grid):
                block = img[r * gh : (r + 1) * gh, c * gw : (c + 1) * gw]
                if block.size == 0:
                    block = img
                cells.append(block.mean(axis=(0, 1)))
        return np.concatenate(cells)


class HashZeroShot:
    """Deterministic pseudo-similarity scorer for desk-scale runs.

    The first prompt (the task prompt) is biased upward so most edits pass the
    semantic stage, mirroring a well-posed task prompt, while a minority gets
    rejected to exercise the filter path.
    """

    def __init__(self, task_bias: float = 0.35):
        self.task_bias = task_bias

    def scores(self, image: np.ndarray, prompts: Sequence[str]) -> list[float]:
        key = content_hash(np.ascontiguousarray(image).tobytes())
        out = []
        for i, prompt in enumerate(prompts):
            digest = content_hash((key + "|" + prompt).encode())
            base = int(digest[:8], 16) / 0xFFFFFFFF * 0.6
            out.append(base + (self.task_bias if i == 0 else 0.0))
        return out
