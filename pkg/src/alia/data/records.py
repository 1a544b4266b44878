"""Core data model: labeled image records with provenance, grouped into datasets."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from alia.errors import IntegrityError

SPLITS = ("train", "val", "test", "extra")
PROVENANCES = ("original", "edited", "txt2img", "real-extra")


@dataclass(frozen=True)
class ImageRecord:
    """One labeled image plus provenance and split membership.

    ``id`` is a content hash of pixels + provenance, so re-ingesting the same
    bytes yields the same id. ``parent_id`` is set exactly when the record is
    an edit of an original image, and ``prompt_id`` when a domain description
    steered its generation.
    """

    id: str
    uri: str
    label: str
    split: str
    provenance: str = "original"
    parent_id: str | None = None
    domain_tags: Mapping[str, str] | None = None
    prompt_id: str | None = None

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise IntegrityError(f"record {self.id}: unknown split {self.split!r}")
        if self.provenance not in PROVENANCES:
            raise IntegrityError(
                f"record {self.id}: unknown provenance {self.provenance!r}"
            )
        if (self.parent_id is not None) != (self.provenance == "edited"):
            raise IntegrityError(
                f"record {self.id}: parent_id must be set iff provenance=edited"
            )

    def with_split(self, split: str) -> "ImageRecord":
        return replace(self, split=split)

    def to_dict(self) -> dict:
        out: dict = {
            "id": self.id,
            "uri": self.uri,
            "label": self.label,
            "split": self.split,
            "provenance": self.provenance,
        }
        if self.parent_id is not None:
            out["parent_id"] = self.parent_id
        if self.domain_tags:
            out["domain_tags"] = dict(self.domain_tags)
        if self.prompt_id is not None:
            out["prompt_id"] = self.prompt_id
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "ImageRecord":
        return cls(
            id=data["id"],
            uri=data["uri"],
            label=data["label"],
            split=data["split"],
            provenance=data.get("provenance", "original"),
            parent_id=data.get("parent_id"),
            domain_tags=dict(data["domain_tags"]) if data.get("domain_tags") else None,
            prompt_id=data.get("prompt_id"),
        )


@dataclass(frozen=True)
class Dataset:
    """Ordered records plus the class list and the superclass noun.

    The superclass is the single word that encapsulates every class ("bird",
    "animal", "airplane"); prompt generation leans on it.
    """

    records: tuple[ImageRecord, ...]
    classes: tuple[str, ...]
    superclass: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "classes", tuple(self.classes))
        known = set(self.classes)
        seen: set[str] = set()
        for rec in self.records:
            if rec.label not in known:
                raise IntegrityError(
                    f"record {rec.id}: label {rec.label!r} not in class list"
                )
            if rec.id in seen:
                raise IntegrityError(f"duplicate record id {rec.id}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def split_records(self, split: str) -> tuple[ImageRecord, ...]:
        return tuple(r for r in self.records if r.split == split)

    def by_id(self) -> dict[str, ImageRecord]:
        return {r.id: r for r in self.records}

    def validate_provenance(self) -> None:
        """Manifest-level invariants, checked at ingestion time.

        Merged training sets deliberately relax the split/provenance pairing
        (augmentation moves edited and real-extra records into train), so
        these checks run on loaded manifests rather than in the constructor.
        """
        index = self.by_id()
        for rec in self.records:
            if (rec.split == "extra") != (rec.provenance == "real-extra"):
                raise IntegrityError(
                    f"record {rec.id}: split=extra must pair with provenance=real-extra"
                )
            if rec.parent_id is not None:
                parent = index.get(rec.parent_id)
                if parent is None:
                    raise IntegrityError(
                        f"record {rec.id}: dangling parent_id {rec.parent_id}"
                    )
                if parent.provenance != "original":
                    raise IntegrityError(
                        f"record {rec.id}: parent {rec.parent_id} is not an original"
                    )


@dataclass(frozen=True)
class ClassDistribution:
    """Non-negative per-class counts."""

    counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", dict(self.counts))
        for cls, n in self.counts.items():
            if n < 0:
                raise IntegrityError(f"negative count for class {cls!r}")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, cls: str) -> int:
        return self.counts.get(cls, 0)

    def items(self) -> Iterable[tuple[str, int]]:
        return self.counts.items()
