"""Parameter-grid sweeps for human selection of edit strength and guidance."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from alia.data.records import Dataset, ImageRecord
from alia.editing.backends import EditBackend
from alia.editing.params import (
    DEFAULT_GUIDANCES,
    DEFAULT_STRENGTHS,
    EditParams,
    SweepGrid,
    validate_strength,
)
from alia.errors import ParamRangeError, PreconditionError
from alia.ids import ImageStore
from alia.rng import choose_without_replacement, derive_seed

log = logging.getLogger(__name__)

DEFAULT_SAMPLE_SIZE = 10
DEFAULT_SEED_COUNT = 4


def run_sweep(
    dataset: Dataset,
    description,
    strengths: Sequence[float] | None,
    guidances: Sequence[float] | None,
    backend: EditBackend,
    *,
    backend_name: str,
    images: ImageStore,
    loader: Callable[[ImageRecord], np.ndarray],
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    seeds: Sequence[int] | None = None,
    base_seed: int = 0,
    instantiate: Callable | None = None,
) -> SweepGrid:
    """Edit a fixed random sample of train images at every grid point.

    Defaults give a 5x5 grid over 10 sample images and 4 seeds, i.e. 40
    images per cell. A backend failure marks the cell incomplete and the
    sweep continues.
    """
    from alia.prompts import instantiate_prompt

    instantiate = instantiate or instantiate_prompt
    strengths = tuple(strengths) if strengths else DEFAULT_STRENGTHS[backend_name]
    guidances = tuple(guidances) if guidances else DEFAULT_GUIDANCES
    if not strengths or not guidances:
        raise PreconditionError("sweep grids must be non-empty")
    for s in strengths:
        validate_strength(backend_name, s)

    train = list(dataset.split_records("train"))
    if not train:
        raise PreconditionError("dataset has no train images to sweep over")
    take = min(sample_size, len(train))
    picked = choose_without_replacement(
        derive_seed(base_seed, "sweep-sample"), len(train), take
    )
    sample = [train[i] for i in picked]
    seed_list = tuple(seeds) if seeds is not None else tuple(
        derive_seed(base_seed, "sweep-seed", i) for i in range(DEFAULT_SEED_COUNT)
    )

    grid = SweepGrid(
        backend=backend_name,
        strengths=strengths,
        guidances=guidances,
        sample_image_ids=tuple(r.id for r in sample),
        seeds=seed_list,
    )
    pixels = {rec.id: loader(rec) for rec in sample}
    for s in strengths:
        for g in guidances:
            uris: list[str] = []
            try:
                for rec in sample:
                    prompt = instantiate(description, rec.label)
                    for seed in seed_list:
                        params = EditParams(backend_name, s, g, seed)
                        uris.append(images.save(backend.edit(pixels[rec.id], prompt, params)))
            except Exception as exc:
                log.warning("sweep cell (%s, %s) incomplete: %s", s, g, exc)
                grid.incomplete.add((s, g))
            grid.cells[(s, g)] = uris
    return grid


def select_params(
    grid: SweepGrid,
    choice: tuple[float, float],
    chooser: str,
    seed: int = 0,
) -> EditParams:
    """Pin the (strength, guidance) pair the operator or config picked.

    The paper protocol is human visual selection of the most diverse cell;
    ``chooser`` records whether a human or a config default decided.
    """
    if chooser not in ("human", "config"):
        raise PreconditionError(f"chooser must be 'human' or 'config', got {chooser!r}")
    strength, guidance = choice
    if not grid.has_cell(strength, guidance):
        raise ParamRangeError(
            f"choice ({strength}, {guidance}) is not a cell of the sweep grid"
        )
    return EditParams(grid.backend, strength, guidance, seed)
