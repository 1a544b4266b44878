"""Pixel-level preprocessing. Only banding crops live here; heavier
augmentation belongs to in-training policies."""

from __future__ import annotations

import math

import numpy as np

from alia.errors import DegenerateCropError, PreconditionError

# Guard against binary float error in h * (1 - top - bottom): the contract is
# real-valued arithmetic, e.g. 100 * (1 - 0.1 - 0.1) must floor to 80.
_EPS = 1e-9


def crop_preprocess(
    image: np.ndarray, top_fraction: float, bottom_fraction: float
) -> np.ndarray:
    """Remove horizontal bands from the top and bottom of an image.

    Output height is floor(h * (1 - top - bottom)); width and channels are
    untouched. Useful for stripping camera-trap watermarks and timestamps.
    """
    if image.size == 0:
        raise PreconditionError("empty image")
    if not (0 <= top_fraction < 0.5) or not (0 <= bottom_fraction < 0.5):
        raise PreconditionError("crop fractions must lie in [0, 0.5)")
    if top_fraction + bottom_fraction >= 1:
        raise PreconditionError("crop fractions must sum to less than 1")

    h = image.shape[0]
    out_h = math.floor(h * (1.0 - top_fraction - bottom_fraction) + _EPS)
    if out_h <= 0:
        raise DegenerateCropError(
            f"crop ({top_fraction}, {bottom_fraction}) leaves no rows of {h}"
        )
    top = math.floor(h * top_fraction + _EPS)
    return np.array(image[top : top + out_h], copy=True)
