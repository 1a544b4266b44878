"""Caption the training set (plus optional context-only images) into a
deduplicated caption pool that seeds domain-description generation."""

from __future__ import annotations

import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from alia.data.records import Dataset, ImageRecord
from alia.errors import BackendError, PreconditionError
from alia.ids import canonical_json, content_hash
from alia.rng import generator

log = logging.getLogger(__name__)

_WS_RUN = re.compile(r"\s+")


def normalize_caption(text: str) -> str:
    """Collapse internal whitespace runs and trim; dedup happens after this."""
    return _WS_RUN.sub(" ", text).strip()


class CaptionerClient(Protocol):
    """Pluggable captioning backend; pure in the image bytes up to backend
    nondeterminism, which the cache papers over on resume."""

    def caption(self, image: np.ndarray) -> str: ...


@dataclass(frozen=True)
class CaptionPool:
    """Unique captions with per-caption occurrence counts.

    ``includes_context_only`` records that background/context images from
    possible test domains contributed captions.
    """

    captions: tuple[str, ...]
    source_counts: dict[str, int] = field(default_factory=dict)
    includes_context_only: bool = False

    @classmethod
    def from_captions(
        cls, raw: Sequence[str], includes_context_only: bool = False
    ) -> "CaptionPool":
        counts: dict[str, int] = {}
        for text in raw:
            norm = normalize_caption(text)
            if not norm:
                continue
            counts[norm] = counts.get(norm, 0) + 1
        return cls(
            captions=tuple(sorted(counts)),
            source_counts=counts,
            includes_context_only=includes_context_only,
        )

    def __len__(self) -> int:
        return len(self.captions)


class CaptionCache:
    """JSON-backed image-id -> caption cache.

    Concurrent readers are safe; writes serialize behind one lock so the
    fan-out captioning workers never race on an id.
    """

    def __init__(self, path: Path | str | None = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._data: dict[str, str] = {}
        if self.path and self.path.exists():
            self._data = json.loads(self.path.read_text(encoding="utf-8"))

    def get(self, image_id: str) -> str | None:
        return self._data.get(image_id)

    def put(self, image_id: str, caption: str) -> None:
        with self._lock:
            self._data[image_id] = caption

    def save(self) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(canonical_json(self._data), encoding="utf-8")
        tmp.replace(self.path)


def caption_dataset(
    dataset: Dataset,
    captioner: CaptionerClient,
    context_images: Sequence[tuple[str, np.ndarray]] | None = None,
    *,
    loader: Callable[[ImageRecord], np.ndarray] | None = None,
    cache: CaptionCache | None = None,
    max_workers: int = 4,
    failure_threshold: float = 0.5,
) -> CaptionPool:
    """Caption every train-split image plus any context images.

    Per-image captioner failures are recorded and tolerated; the operation
    fails only when the failure ratio exceeds ``failure_threshold``.
    """
    context_images = list(context_images or [])
    train = list(dataset.split_records("train"))
    if not train and not context_images:
        raise PreconditionError("nothing to caption: empty dataset and no context images")
    if train and loader is None:
        raise PreconditionError("a loader is required to caption dataset records")

    jobs: list[tuple[str, Callable[[], np.ndarray], bool]] = []
    for rec in train:
        jobs.append((rec.id, (lambda r=rec: loader(r)), False))
    for ctx_id, image in context_images:
        jobs.append((ctx_id, (lambda img=image: img), True))

    captions: list[str] = []
    errors: dict[str, str] = {}
    context_captioned = False
    results_lock = threading.Lock()

    def run_job(job: tuple[str, Callable[[], np.ndarray], bool]) -> None:
        nonlocal context_captioned
        image_id, load, is_context = job
        cached = cache.get(image_id) if cache else None
        try:
            text = cached if cached is not None else captioner.caption(load())
        except Exception as exc:  # per-image failure, recorded and tolerated
            with results_lock:
                errors[image_id] = str(exc)
            return
        if cache and cached is None:
            cache.put(image_id, text)
        with results_lock:
            captions.append(text)
            if is_context:
                context_captioned = True

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        list(pool.map(run_job, jobs))

    if errors:
        log.warning("captioning failed for %d of %d images", len(errors), len(jobs))
    if len(errors) / len(jobs) > failure_threshold:
        raise BackendError(
            f"captioning failed for {len(errors)} of {len(jobs)} images "
            f"(threshold {failure_threshold:.0%})"
        )

    if cache:
        cache.save()
    return CaptionPool.from_captions(captions, includes_context_only=context_captioned)


def sample_captions(pool: CaptionPool, n: int = 200, seed: int = 0) -> list[str]:
    """min(n, |pool|) unique captions, uniform without replacement, seeded."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    ordered = list(pool.captions)
    perm = generator(seed).permutation(len(ordered))
    return [ordered[i] for i in perm[: min(n, len(ordered))]]


class StubCaptioner:
    """Deterministic captioner for tests and desk-scale runs.

    The caption is a scene phrase selected by the image's content hash, so
    identical pixels always caption identically.
    """

    DEFAULT_SCENES = (
        "in a grassy clearing",
        "near a shallow stream",
        "on a rocky ledge at dusk",
        "under dense forest cover",
        "beside a fallen log",
        "crossing a dirt trail",
    )

    def __init__(self, superclass: str = "animal", scenes: Sequence[str] | None = None):
        self.superclass = superclass
        self.scenes = tuple(scenes or self.DEFAULT_SCENES)

    def caption(self, image: np.ndarray) -> str:
        digest = content_hash(np.ascontiguousarray(image).tobytes())
        scene = self.scenes[int(digest[:8], 16) % len(self.scenes)]
        return f"a photo of a {self.superclass} {scene}"


class FailingCaptioner:
    """Test double that fails every call; exercises the error-tolerance path."""

    def __init__(self, message: str = "captioner offline"):
        self.message = message

    def caption(self, image: np.ndarray) -> str:
        raise BackendError(self.message)
