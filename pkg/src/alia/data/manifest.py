"""Manifest I/O.

A manifest is a UTF-8 line-delimited file: one canonical JSON record per line,
file order preserved. Classes and the superclass live in a sidecar header
(``<manifest>.header.json``) so the record stream stays diff-friendly and
appendable. Saving a loaded manifest reproduces the bytes exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from alia.data.records import Dataset, ImageRecord
from alia.errors import MalformedManifestError
from alia.ids import canonical_json


def header_path(path: Path | str) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".header.json")


def load_manifest(path: Path | str) -> Dataset:
    """Parse a manifest plus its header sidecar into a validated Dataset."""
    path = Path(path)
    if not path.exists():
        raise MalformedManifestError(f"manifest not found: {path}")

    classes: list[str] = []
    superclass = ""
    hpath = header_path(path)
    if hpath.exists():
        try:
            header = json.loads(hpath.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MalformedManifestError(f"{hpath}: invalid header: {exc}") from exc
        classes = list(header.get("classes", []))
        superclass = header.get("superclass", "")

    records: list[ImageRecord] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedManifestError(
                    f"{path}: line {lineno}: {exc.msg}"
                ) from exc
            try:
                records.append(ImageRecord.from_dict(data))
            except KeyError as exc:
                raise MalformedManifestError(
                    f"{path}: line {lineno}: missing field {exc}"
                ) from exc

    if not classes:
        seen: list[str] = []
        for rec in records:
            if rec.label not in seen:
                seen.append(rec.label)
        classes = seen

    dataset = Dataset(records=tuple(records), classes=tuple(classes), superclass=superclass)
    dataset.validate_provenance()
    return dataset


def save_manifest(dataset: Dataset, path: Path | str) -> None:
    """Write records one canonical-JSON line each, plus the header sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [canonical_json(rec.to_dict()) for rec in dataset.records]
    body = "".join(line + "\n" for line in lines)
    path.write_text(body, encoding="utf-8")
    header = {"classes": list(dataset.classes), "superclass": dataset.superclass}
    header_path(path).write_text(
        canonical_json(header) + "\n", encoding="utf-8"
    )
