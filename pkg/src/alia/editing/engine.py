"""Edit generation over the training set, with resumable content-addressed
records and the text-to-image baseline generator."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from alia.data.records import Dataset, ImageRecord
from alia.editing.backends import EditBackend
from alia.editing.params import EditParams
from alia.errors import BackendError, IntegrityError, PreconditionError
from alia.ids import ImageStore, canonical_json, text_hash
from alia.rng import derive_seed

log = logging.getLogger(__name__)

STATUSES = (
    "generated",
    "kept",
    "filtered-semantic",
    "filtered-confidence",
    "filtered-knn",
    "human-rejected",
    "human-restored",
)

# Legal status transitions; the review loop can toggle between the two human
# states, everything else is one-way from the pipeline.
_TRANSITIONS: dict[str, set[str]] = {
    "generated": {"kept", "filtered-semantic", "filtered-confidence", "filtered-knn"},
    "kept": {"human-rejected"},
    "filtered-semantic": {"human-restored"},
    "filtered-confidence": {"human-restored"},
    "filtered-knn": {"human-restored"},
    "human-rejected": {"human-restored"},
    "human-restored": {"human-rejected"},
}

USABLE_STATUSES = ("kept", "human-restored")


@dataclass(frozen=True)
class AugmentationRecord:
    """One generated image: provenance links, parameters, and filter status."""

    edit_id: str
    parent_id: str | None
    prompt_id: str
    label: str
    params: EditParams
    uri: str | None
    status: str = "generated"
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "edit_id": self.edit_id,
            "parent_id": self.parent_id,
            "prompt_id": self.prompt_id,
            "label": self.label,
            "params": self.params.to_dict(),
            "uri": self.uri,
            "status": self.status,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentationRecord":
        return cls(
            edit_id=data["edit_id"],
            parent_id=data.get("parent_id"),
            prompt_id=data["prompt_id"],
            label=data["label"],
            params=EditParams.from_dict(data["params"]),
            uri=data.get("uri"),
            status=data.get("status", "generated"),
            error=data.get("error"),
        )

    def to_image_record(self) -> ImageRecord:
        provenance = "edited" if self.parent_id else "txt2img"
        return ImageRecord(
            id=self.edit_id,
            uri=self.uri or "",
            label=self.label,
            split="train",
            provenance=provenance,
            parent_id=self.parent_id,
            prompt_id=self.prompt_id,
        )


class RecordStore:
    """Append-only augmentation-record log plus a status-transition audit log.

    ``records.jsonl`` holds one insert per line; ``status.jsonl`` holds one
    transition event per line and is folded over the records on load. Appends
    are single atomic line writes, so a crash never corrupts prior records and
    re-running a generation stage resumes where it stopped.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._records_path = self.root / "records.jsonl"
        self._status_path = self.root / "status.jsonl"

    def append(self, record: AugmentationRecord) -> None:
        with self._records_path.open("a", encoding="utf-8") as fh:
            fh.write(canonical_json(record.to_dict()) + "\n")
            fh.flush()

    def update_status(self, edit_id: str, new_status: str, actor: str = "pipeline") -> None:
        self.update_statuses({edit_id: new_status}, actor=actor)

    def update_statuses(self, transitions: dict[str, str], actor: str = "pipeline") -> None:
        """Validate and append a batch of status transitions in one pass."""
        records = self.load()
        events = []
        for edit_id, new_status in transitions.items():
            current = records.get(edit_id)
            if current is None:
                raise IntegrityError(f"unknown edit id {edit_id}")
            if new_status not in _TRANSITIONS.get(current.status, set()):
                raise IntegrityError(
                    f"illegal status transition {current.status} -> {new_status} "
                    f"for edit {edit_id}"
                )
            events.append(
                {"edit_id": edit_id, "from": current.status, "to": new_status, "actor": actor}
            )
        with self._status_path.open("a", encoding="utf-8") as fh:
            for event in events:
                fh.write(canonical_json(event) + "\n")
            fh.flush()

    @staticmethod
    def _read_lines(path: Path) -> list[dict]:
        """Parse a JSONL log, truncating a torn final line left by a crash."""
        if not path.exists():
            return []
        raw = path.read_text(encoding="utf-8")
        lines = raw.splitlines()
        parsed: list[dict] = []
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                parsed.append(json.loads(line))
            except json.JSONDecodeError:
                if i == len(lines) - 1 and not raw.endswith("\n"):
                    good = "".join(l + "\n" for l in lines[:-1])
                    path.write_text(good, encoding="utf-8")
                    break
                raise
        return parsed

    def load(self) -> dict[str, AugmentationRecord]:
        records: dict[str, AugmentationRecord] = {}
        for data in self._read_lines(self._records_path):
            rec = AugmentationRecord.from_dict(data)
            records[rec.edit_id] = rec
        for event in self._read_lines(self._status_path):
            rec = records.get(event["edit_id"])
            if rec is not None:
                records[rec.edit_id] = replace(rec, status=event["to"])
        return records

    def audit_log(self) -> list[dict]:
        if not self._status_path.exists():
            return []
        return [
            json.loads(line)
            for line in self._status_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]


def derive_edit_seed(base_seed: int, image_id: str, prompt_id: str, replica: int) -> int:
    """Per-edit seed; collision-free across (image, prompt, replica) triples."""
    return derive_seed(base_seed, "edit", image_id, prompt_id, replica)


def edit_identity(
    image_id: str, prompt_id: str, replica: int, params: EditParams
) -> str:
    """Stable edit id: resuming a run recognizes completed work by this key."""
    payload = canonical_json({
        "image": image_id,
        "prompt": prompt_id,
        "replica": replica,
        "params": params.to_dict(),
    })
    return text_hash(payload, length=20)


def generate_edits(
    dataset: Dataset,
    descriptions: Sequence,
    params: EditParams,
    backend: EditBackend,
    *,
    store: RecordStore,
    images: ImageStore,
    loader: Callable[[ImageRecord], np.ndarray],
    edits_per_image: int = 2,
    instantiate: Callable | None = None,
    max_failure_ratio: float = 0.5,
) -> list[AugmentationRecord]:
    """Edit every train image with every description, ``edits_per_image``
    replicas each under distinct derived seeds.

    Completed edits are recognized by edit id and skipped, so interrupting and
    re-running converges on the identical record set.
    """
    from alia.prompts import instantiate_prompt

    instantiate = instantiate or instantiate_prompt
    if not descriptions:
        raise PreconditionError("descriptions must be non-empty")

    existing = store.load()
    out: list[AugmentationRecord] = []
    failures = 0
    attempts = 0
    for rec in dataset.split_records("train"):
        source = None
        for desc in descriptions:
            prompt = instantiate(desc, rec.label)
            for replica in range(edits_per_image):
                seed = derive_edit_seed(params.seed, rec.id, desc.id, replica)
                run_params = params.with_seed(seed)
                edit_id = edit_identity(rec.id, desc.id, replica, run_params)
                if edit_id in existing:
                    out.append(existing[edit_id])
                    continue
                attempts += 1
                try:
                    if source is None:
                        source = loader(rec)
                    edited = backend.edit(source, prompt, run_params)
                    uri = images.save(edited)
                    record = AugmentationRecord(
                        edit_id=edit_id, parent_id=rec.id, prompt_id=desc.id,
                        label=rec.label, params=run_params, uri=uri,
                    )
                except Exception as exc:
                    failures += 1
                    record = AugmentationRecord(
                        edit_id=edit_id, parent_id=rec.id, prompt_id=desc.id,
                        label=rec.label, params=run_params, uri=None, error=str(exc),
                    )
                store.append(record)
                existing[edit_id] = record
                out.append(record)

    if attempts and failures / attempts > max_failure_ratio:
        raise BackendError(
            f"edit backend failed on {failures} of {attempts} new edits"
        )
    if failures:
        log.warning("edit backend failed on %d of %d new edits", failures, attempts)
    return out


def txt2img_generate(
    prompt_template,
    per_class_count: int,
    classes: Sequence[str],
    params: EditParams,
    backend: EditBackend,
    *,
    store: RecordStore,
    images: ImageStore,
    instantiate: Callable | None = None,
) -> list[AugmentationRecord]:
    """Per-class text-to-image generation for the ungrounded baseline.

    ``prompt_template`` is a DomainDescription or a raw template string
    containing the class placeholder.
    """
    from alia.prompts import PLACEHOLDER, make_description

    if isinstance(prompt_template, str):
        if PLACEHOLDER not in prompt_template:
            raise PreconditionError("prompt must contain the class placeholder")
        prompt_template = make_description(prompt_template, prefix="", source="user-provided")

    existing = store.load()
    out: list[AugmentationRecord] = []
    for label in classes:
        from alia.prompts import instantiate_prompt

        prompt = (instantiate or instantiate_prompt)(prompt_template, label)
        for k in range(per_class_count):
            seed = derive_seed(params.seed, "txt2img", prompt_template.id, label, k)
            run_params = params.with_seed(seed)
            edit_id = edit_identity(f"txt2img:{label}", prompt_template.id, k, run_params)
            if edit_id in existing:
                out.append(existing[edit_id])
                continue
            try:
                generated = backend.generate(prompt, run_params, 1)[0]
                uri = images.save(generated)
                record = AugmentationRecord(
                    edit_id=edit_id, parent_id=None, prompt_id=prompt_template.id,
                    label=label, params=run_params, uri=uri,
                )
            except Exception as exc:
                record = AugmentationRecord(
                    edit_id=edit_id, parent_id=None, prompt_id=prompt_template.id,
                    label=label, params=run_params, uri=None, error=str(exc),
                )
            store.append(record)
            existing[edit_id] = record
            out.append(record)
    return out
