"""Failed-edit filtering.

Three failure modes motivate the stages: total failures (the edit no longer
depicts the task at all) fall to the semantic filter; identity failures (the
edit barely changed anything) and class-corruption failures (the edit broke
the class-relevant features) fall to the confidence filter, which removes an
edit when the task classifier's confidence in its predicted class reaches
that class's threshold. The optional nearest-neighbor stage additionally
demands the closest train image share the edit's label; it is off by default.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from alia.editing.engine import AugmentationRecord, RecordStore
from alia.errors import ConfigError
from alia.filtering.interfaces import (
    EmbeddingIndex,
    ImageEmbedder,
    TaskClassifier,
    ZeroShotClassifier,
)
from alia.filtering.thresholds import ThresholdTable

log = logging.getLogger(__name__)

# Distractor prompts paired with a bird-photography task prompt; other
# datasets swap the task prompt and reuse these generic distractors.
DEFAULT_SEMANTIC_DISTRACTORS = (
    "a photo of an object",
    "a photo of a scene",
    "a photo of geometric shapes",
    "a photo",
    "an image",
)


@dataclass(frozen=True)
class FilterVerdict:
    """One stage's decision on one edit, with the scores that drove it."""

    edit_id: str
    stage: str  # semantic | confidence | knn
    keep: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "edit_id": self.edit_id,
            "stage": self.stage,
            "keep": self.keep,
            "detail": self.detail,
        }


@dataclass
class FilterConfig:
    """Stage toggles and the semantic prompts.

    Tie policies are fixed and documented: semantic argmax ties keep the
    edit; confidence argmax ties resolve to the lowest class index.
    """

    semantic: bool = True
    confidence: bool = True
    knn: bool = False
    task_prompt: str = ""
    distractors: tuple[str, ...] = DEFAULT_SEMANTIC_DISTRACTORS

    def to_dict(self) -> dict:
        return {
            "semantic": self.semantic,
            "confidence": self.confidence,
            "knn": self.knn,
            "task_prompt": self.task_prompt,
            "distractors": list(self.distractors),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FilterConfig":
        return cls(
            semantic=data.get("semantic", True),
            confidence=data.get("confidence", True),
            knn=data.get("knn", False),
            task_prompt=data.get("task_prompt", ""),
            distractors=tuple(data.get("distractors", DEFAULT_SEMANTIC_DISTRACTORS)),
        )


def semantic_filter(
    zs: ZeroShotClassifier,
    edit: AugmentationRecord,
    image: np.ndarray,
    task_prompt: str,
    distractors: Sequence[str],
) -> FilterVerdict:
    """Keep the edit iff the task prompt wins the zero-shot vote.

    Ties break toward keeping: a distractor must strictly beat the task
    prompt to reject.
    """
    if not distractors:
        raise ConfigError("semantic filter needs at least one distractor prompt")
    prompts = [task_prompt, *distractors]
    scores = [float(s) for s in zs.scores(image, prompts)]
    keep = scores[0] >= max(scores[1:])
    argmax = prompts[int(np.argmax(scores))] if not keep else task_prompt
    return FilterVerdict(
        edit_id=edit.edit_id,
        stage="semantic",
        keep=keep,
        detail={"scores": dict(zip(prompts, scores)), "argmax": argmax},
    )


def confidence_filter(
    classifier: TaskClassifier,
    edit: AugmentationRecord,
    image: np.ndarray,
    thresholds: ThresholdTable,
    classes: Sequence[str],
) -> FilterVerdict:
    """Remove the edit when the classifier is at least threshold-confident in
    its predicted class.

    With prediction p = argmax softmax(x') (ties to the lowest class index),
    the edit is filtered iff softmax(x')[p] >= t_p. A filtered edit whose
    prediction matches its label is an identity failure (the edit changed too
    little); a mismatch is a class-corruption failure.
    """
    probs = np.asarray(classifier.softmax(image), dtype=np.float64)
    pred_idx = int(np.argmax(probs))  # numpy argmax takes the first maximum
    predicted = classes[pred_idx]
    confidence = float(probs[pred_idx])
    threshold = thresholds[predicted]
    keep = confidence < threshold
    detail = {
        "predicted": predicted,
        "confidence": confidence,
        "threshold": threshold,
    }
    if not keep:
        detail["failure"] = "identity" if predicted == edit.label else "class-corruption"
    return FilterVerdict(edit_id=edit.edit_id, stage="confidence", keep=keep, detail=detail)


def knn_filter(
    embedder: ImageEmbedder,
    edit: AugmentationRecord,
    image: np.ndarray,
    index: EmbeddingIndex,
) -> FilterVerdict:
    """Keep the edit iff its cosine-nearest train image shares its label."""
    neighbor_id, neighbor_label = index.nearest(embedder.embed(image))
    keep = neighbor_label == edit.label
    return FilterVerdict(
        edit_id=edit.edit_id,
        stage="knn",
        keep=keep,
        detail={"neighbor_id": neighbor_id, "neighbor_label": neighbor_label},
    )


@dataclass
class FilterOutcome:
    kept: list[AugmentationRecord]
    filtered: list[AugmentationRecord]
    verdicts: dict[str, list[FilterVerdict]]


def filter_pipeline(
    edits: Sequence[AugmentationRecord],
    images: Callable[[AugmentationRecord], np.ndarray],
    config: FilterConfig,
    *,
    zero_shot: ZeroShotClassifier | None = None,
    task_classifier: TaskClassifier | None = None,
    thresholds: ThresholdTable | None = None,
    classes: Sequence[str] = (),
    embedder: ImageEmbedder | None = None,
    index: EmbeddingIndex | None = None,
    store: RecordStore | None = None,
) -> FilterOutcome:
    """Run the enabled stages in order semantic -> confidence -> knn.

    An edit is kept iff every enabled stage keeps it; evaluation short-circuits
    after the first rejection, and each evaluated stage leaves one verdict.
    Record statuses are updated through the store when one is given.
    """
    if config.semantic and zero_shot is None:
        raise ConfigError("semantic stage enabled but no zero-shot classifier given")
    if config.confidence and (task_classifier is None or thresholds is None):
        raise ConfigError("confidence stage enabled but classifier/thresholds missing")
    if config.knn and (embedder is None or index is None):
        raise ConfigError("knn stage enabled but embedder/index missing")

    kept: list[AugmentationRecord] = []
    filtered: list[AugmentationRecord] = []
    verdicts: dict[str, list[FilterVerdict]] = {}
    transitions: dict[str, str] = {}

    for edit in edits:
        if edit.error is not None or edit.uri is None:
            continue  # failed generations never reach filtering
        image = images(edit)
        trail: list[FilterVerdict] = []
        rejected_stage: str | None = None

        if config.semantic:
            verdict = semantic_filter(zero_shot, edit, image, config.task_prompt, config.distractors)
            trail.append(verdict)
            if not verdict.keep:
                rejected_stage = "semantic"
        if rejected_stage is None and config.confidence:
            verdict = confidence_filter(task_classifier, edit, image, thresholds, classes)
            trail.append(verdict)
            if not verdict.keep:
                rejected_stage = "confidence"
        if rejected_stage is None and config.knn:
            verdict = knn_filter(embedder, edit, image, index)
            trail.append(verdict)
            if not verdict.keep:
                rejected_stage = "knn"

        verdicts[edit.edit_id] = trail
        transitions[edit.edit_id] = (
            "kept" if rejected_stage is None else f"filtered-{rejected_stage}"
        )
        if rejected_stage is None:
            kept.append(edit)
        else:
            filtered.append(edit)

    if store is not None and transitions:
        store.update_statuses(transitions)
    log.info("filtering kept %d of %d edits", len(kept), len(kept) + len(filtered))
    return FilterOutcome(kept=kept, filtered=filtered, verdicts=verdicts)
