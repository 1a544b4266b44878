"""In-training augmentation policies.

Policies transform training images at fit time and never add records to the
dataset; the trainer consumes the (label, weight) assignments they emit, which
lets label-mixing policies stay faithful to their published math.
"""

from __future__ import annotations

from typing import Protocol, Sequence

import numpy as np


class AugmentationPolicy(Protocol):
    def apply(
        self,
        images: Sequence[np.ndarray],
        labels: Sequence[str],
        rng: np.random.Generator,
    ) -> list[tuple[np.ndarray, list[tuple[str, float]]]]: ...


class CutMixPolicy:
    """Cut-and-paste mixing between random training pairs.

    The mixing ratio is Beta(alpha, alpha) with alpha=1 (the cited default);
    the pasted box area matches 1 - lambda, and labels mix proportional to
    surviving area.
    """

    def __init__(self, alpha: float = 1.0):
        self.alpha = alpha

    def apply(self, images, labels, rng):
        out = []
        n = len(images)
        partners = rng.integers(0, n, size=n)
        for i, (img, label) in enumerate(zip(images, labels)):
            j = int(partners[i])
            lam = float(rng.beta(self.alpha, self.alpha))
            h, w = img.shape[:2]
            cut_ratio = np.sqrt(1.0 - lam)
            ch, cw = int(h * cut_ratio), int(w * cut_ratio)
            mixed = np.array(img, copy=True)
            if ch > 0 and cw > 0:
                cy = int(rng.integers(0, h - ch + 1))
                cx = int(rng.integers(0, w - cw + 1))
                mixed[cy : cy + ch, cx : cx + cw] = images[j][cy : cy + ch, cx : cx + cw]
                area = (ch * cw) / (h * w)
            else:
                area = 0.0
            assignment = [(label, 1.0 - area)]
            if area > 0:
                assignment.append((labels[j], area))
            out.append((mixed, assignment))
        return out


class RandAugmentPolicy:
    """Reduced-search-space random augmentation: N ops at shared magnitude M.

    Follows the cited method's torchvision defaults of N=2 ops and magnitude
    9 on a 31-step scale, over a compact op set that keeps labels intact.
    """

    def __init__(self, num_ops: int = 2, magnitude: int = 9, magnitude_bins: int = 31):
        self.num_ops = num_ops
        self.level = magnitude / magnitude_bins
        self._ops = (
            self._brightness,
            self._contrast,
            self._posterize,
            self._solarize,
            self._flip,
            self._translate,
        )

    def _brightness(self, img, rng):
        factor = 1.0 + self.level * (1 if rng.random() < 0.5 else -1)
        return np.clip(img.astype(np.float64) * factor, 0, 255).astype(np.uint8)

    def _contrast(self, img, rng):
        mean = img.mean()
        factor = 1.0 + self.level * (1 if rng.random() < 0.5 else -1)
        return np.clip((img.astype(np.float64) - mean) * factor + mean, 0, 255).astype(np.uint8)

    def _posterize(self, img, rng):
        bits = max(1, 8 - int(self.level * 4))
        mask = 255 - (2 ** (8 - bits) - 1)
        return (img & mask).astype(np.uint8)

    def _solarize(self, img, rng):
        threshold = int(255 * (1.0 - self.level))
        out = np.array(img, copy=True)
        out[out >= threshold] = 255 - out[out >= threshold]
        return out

    def _flip(self, img, rng):
        return img[:, ::-1].copy()

    def _translate(self, img, rng):
        shift = int(img.shape[1] * self.level * 0.3)
        if shift == 0:
            return img
        return np.roll(img, shift if rng.random() < 0.5 else -shift, axis=1)

    def apply(self, images, labels, rng):
        out = []
        for img, label in zip(images, labels):
            transformed = img
            picks = rng.integers(0, len(self._ops), size=self.num_ops)
            for op_idx in picks:
                transformed = self._ops[int(op_idx)](transformed, rng)
            out.append((transformed, [(label, 1.0)]))
        return out


POLICIES = {
    "+cutmix": CutMixPolicy,
    "+randaug": RandAugmentPolicy,
}
