"""Edit parameters and sweep grids.

Strength semantics are per backend and deliberately not unified: img2img
strength lives in (0, 1) and says how far to deviate from the source image,
while instruct-pix2pix "strength" is its image-guidance knob in (1, 2).
Text guidance is positive for every backend. All other sampler settings stay
at backend defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from alia.errors import ParamRangeError

BACKENDS = ("img2img", "instruct-pix2pix", "txt2img")

STRENGTH_RANGES: dict[str, tuple[float, float]] = {
    "img2img": (0.0, 1.0),
    "instruct-pix2pix": (1.0, 2.0),
}

# Default 5x5 sweep axes. Strengths span each backend's documented range;
# guidances bracket the commonly probed values 5.0, 7.5, and 9.0.
DEFAULT_STRENGTHS: dict[str, tuple[float, ...]] = {
    "img2img": (0.1, 0.3, 0.5, 0.7, 0.9),
    "instruct-pix2pix": (1.1, 1.3, 1.5, 1.7, 1.9),
}
DEFAULT_GUIDANCES: tuple[float, ...] = (2.5, 5.0, 7.5, 9.0, 12.5)

# Axis-sweep presets: guidance pinned at 7.5 while strength varies, and
# strength pinned per backend while guidance takes {5.0, 7.5, 9.0}.
AXIS_SWEEP_GUIDANCE_PIN = 7.5
AXIS_SWEEP_STRENGTH_PIN: dict[str, float] = {"img2img": 0.4, "instruct-pix2pix": 1.3}
AXIS_SWEEP_GUIDANCES: tuple[float, ...] = (5.0, 7.5, 9.0)


def validate_strength(backend: str, strength: float) -> None:
    if backend not in BACKENDS:
        raise ParamRangeError(f"unknown backend {backend!r}")
    bounds = STRENGTH_RANGES.get(backend)
    if bounds is None:  # txt2img has no source image to deviate from
        return
    low, high = bounds
    if not (low < strength < high):
        raise ParamRangeError(
            f"strength {strength} outside ({low}, {high}) for {backend}"
        )


@dataclass(frozen=True)
class EditParams:
    backend: str
    strength: float
    guidance: float
    seed: int

    def __post_init__(self) -> None:
        validate_strength(self.backend, self.strength)
        if self.guidance <= 0:
            raise ParamRangeError(f"guidance must be positive, got {self.guidance}")

    def with_seed(self, seed: int) -> "EditParams":
        return EditParams(self.backend, self.strength, self.guidance, seed)

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "strength": self.strength,
            "guidance": self.guidance,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EditParams":
        return cls(data["backend"], data["strength"], data["guidance"], data["seed"])


@dataclass
class SweepGrid:
    """Parameter grid of sample edits for human inspection.

    Each complete cell holds |sample_image_ids| x |seeds| edit uris.
    """

    backend: str
    strengths: tuple[float, ...]
    guidances: tuple[float, ...]
    sample_image_ids: tuple[str, ...]
    seeds: tuple[int, ...]
    cells: dict[tuple[float, float], list[str]] = field(default_factory=dict)
    incomplete: set[tuple[float, float]] = field(default_factory=set)

    @property
    def expected_per_cell(self) -> int:
        return len(self.sample_image_ids) * len(self.seeds)

    def cell_count(self) -> int:
        return len(self.strengths) * len(self.guidances)

    def has_cell(self, strength: float, guidance: float) -> bool:
        return strength in self.strengths and guidance in self.guidances

    def to_json(self) -> dict:
        return {
            "backend": self.backend,
            "strengths": list(self.strengths),
            "guidances": list(self.guidances),
            "sample_image_ids": list(self.sample_image_ids),
            "seeds": list(self.seeds),
            "cells": [
                {
                    "strength": s,
                    "guidance": g,
                    "uris": uris,
                    "complete": (s, g) not in self.incomplete,
                }
                for (s, g), uris in sorted(self.cells.items())
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SweepGrid":
        grid = cls(
            backend=data["backend"],
            strengths=tuple(data["strengths"]),
            guidances=tuple(data["guidances"]),
            sample_image_ids=tuple(data["sample_image_ids"]),
            seeds=tuple(data["seeds"]),
        )
        for cell in data.get("cells", []):
            key = (cell["strength"], cell["guidance"])
            grid.cells[key] = list(cell["uris"])
            if not cell.get("complete", True):
                grid.incomplete.add(key)
        return grid
