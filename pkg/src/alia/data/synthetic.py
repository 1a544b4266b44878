"""Deterministic synthetic datasets for desk-scale runs and tests.

Images are procedural color fields keyed by (class, index, split): each class
owns a base hue and each image varies brightness and adds a class-specific
glyph block, so a trivially weak classifier can still separate classes while
every byte stays reproducible.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from alia.data.manifest import save_manifest
from alia.data.records import Dataset, ImageRecord
from alia.ids import ImageStore, image_id
from alia.rng import derive_seed, generator

DEFAULT_CLASSES = ("quillback", "marblefin", "duskpaw")

_BASE_HUES = np.array(
    [
        [200, 60, 40],
        [40, 180, 70],
        [50, 80, 210],
        [200, 180, 40],
        [150, 60, 180],
        [60, 190, 190],
    ],
    dtype=np.float64,
)


def synthetic_image(
    class_index: int, sample_index: int, seed: int, size: int = 32
) -> np.ndarray:
    rng = generator(derive_seed(seed, "synthetic", class_index, sample_index))
    base = _BASE_HUES[class_index % len(_BASE_HUES)]
    scale = 0.6 + 0.4 * rng.random()
    img = np.tile(base * scale, (size, size, 1))
    noise = rng.normal(0, 12, size=(size, size, 3))
    img = img + noise
    # Class glyph: a bright block whose position encodes the class.
    block = size // 4
    r = (class_index * block) % (size - block)
    img[r : r + block, r : r + block] = np.clip(base * 1.4, 0, 255)
    return np.clip(img, 0, 255).astype(np.uint8)


def build_synthetic_dataset(
    store: ImageStore,
    classes: tuple[str, ...] = DEFAULT_CLASSES,
    per_class: dict[str, int] | None = None,
    seed: int = 7,
    superclass: str = "critter",
    size: int = 32,
) -> Dataset:
    """Materialize a labeled synthetic dataset into an image store.

    ``per_class`` maps split -> images per class, default 10 train / 2 extra /
    3 val / 5 test (a 3-class dataset then totals 60 images).
    """
    per_class = per_class or {"train": 10, "extra": 2, "val": 3, "test": 5}
    records: list[ImageRecord] = []
    counter = 0
    for split, count in per_class.items():
        provenance = "real-extra" if split == "extra" else "original"
        for ci, cls in enumerate(classes):
            for k in range(count):
                pixels = synthetic_image(ci, counter, seed, size=size)
                uri = store.save(pixels)
                records.append(
                    ImageRecord(
                        id=image_id(pixels, provenance),
                        uri=uri,
                        label=cls,
                        split=split,
                        provenance=provenance,
                    )
                )
                counter += 1
    return Dataset(records=tuple(records), classes=classes, superclass=superclass)


def write_synthetic_fixture(
    root: Path | str,
    classes: tuple[str, ...] = DEFAULT_CLASSES,
    per_class: dict[str, int] | None = None,
    seed: int = 7,
    superclass: str = "critter",
) -> Path:
    """Create ``<root>/manifest.jsonl`` plus an image store; returns manifest path."""
    root = Path(root)
    store = ImageStore(root / "images")
    dataset = build_synthetic_dataset(
        store, classes=classes, per_class=per_class, seed=seed, superclass=superclass
    )
    manifest = root / "manifest.jsonl"
    save_manifest(dataset, manifest)
    return manifest
