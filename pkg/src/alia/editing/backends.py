"""Editing backends behind one adapter protocol.

The wire contract for out-of-process model servers is fixed: request fields
``image`` (base64 PNG or null), ``prompt``, ``strength``, ``guidance``,
``seed``; response field ``image`` (base64 PNG). The stub backend is a
deterministic procedural editor so the whole pipeline is testable without
accelerators: identical (image, prompt, params) always yields identical bytes.
"""

from __future__ import annotations

import base64
from typing import Protocol

import numpy as np

from alia.editing.params import EditParams
from alia.errors import BackendError
from alia.ids import content_hash, decode_png, encode_png
from alia.rng import derive_seed, generator


class EditBackend(Protocol):
    def edit(self, image: np.ndarray, prompt: str, params: EditParams) -> np.ndarray: ...

    def generate(self, prompt: str, params: EditParams, count: int) -> list[np.ndarray]: ...


def _prompt_color(prompt: str) -> np.ndarray:
    digest = content_hash(prompt.encode())
    return np.array(
        [int(digest[i : i + 2], 16) for i in (0, 2, 4)], dtype=np.float64
    )


class StubEditBackend:
    """Procedural editor: blends the source toward a prompt-keyed color field.

    Strength controls the blend toward the prompt color (instruct-pix2pix
    strengths in (1, 2) are shifted down by 1 so both backends share the
    deviation scale); guidance saturates the prompt color; the seed drives a
    reproducible noise field.
    """

    def __init__(self, size: int = 32):
        self.size = size

    @staticmethod
    def _deviation(params: EditParams) -> float:
        s = params.strength
        return s - 1.0 if params.backend == "instruct-pix2pix" else s

    def edit(self, image: np.ndarray, prompt: str, params: EditParams) -> np.ndarray:
        rng = generator(
            derive_seed(
                params.seed, "stub-edit", content_hash(np.ascontiguousarray(image).tobytes()),
                prompt, params.backend, f"{params.strength:.6f}", f"{params.guidance:.6f}",
            )
        )
        deviation = 0.7 * self._deviation(params)
        saturation = min(1.0, params.guidance / 10.0)
        tint = _prompt_color(prompt) * saturation + 128.0 * (1 - saturation)
        out = image.astype(np.float64) * (1 - deviation) + tint * deviation
        out += rng.normal(0, 4.0 + 8.0 * deviation, size=image.shape)
        return np.clip(out, 0, 255).astype(np.uint8)

    def generate(self, prompt: str, params: EditParams, count: int) -> list[np.ndarray]:
        base = _prompt_color(prompt)
        images = []
        for k in range(count):
            rng = generator(derive_seed(params.seed, "stub-txt2img", prompt, k))
            img = np.tile(base, (self.size, self.size, 1))
            img += rng.normal(0, 20, size=img.shape)
            images.append(np.clip(img, 0, 255).astype(np.uint8))
        return images


class FlakyEditBackend:
    """Test double wrapping another backend, failing on a fixed cadence."""

    def __init__(self, inner: EditBackend, fail_every: int = 3):
        self.inner = inner
        self.fail_every = fail_every
        self.calls = 0

    def edit(self, image: np.ndarray, prompt: str, params: EditParams) -> np.ndarray:
        self.calls += 1
        if self.calls % self.fail_every == 0:
            raise BackendError(f"synthetic failure on call {self.calls}")
        return self.inner.edit(image, prompt, params)

    def generate(self, prompt: str, params: EditParams, count: int) -> list[np.ndarray]:
        self.calls += 1
        if self.calls % self.fail_every == 0:
            raise BackendError(f"synthetic failure on call {self.calls}")
        return self.inner.generate(prompt, params, count)


class HttpEditBackend:
    """Adapter for an HTTP model server speaking the fixed JSON contract."""

    def __init__(self, url: str, timeout: float = 120.0):
        self.url = url
        self.timeout = timeout

    def _post(self, payload: dict) -> np.ndarray:
        import httpx

        response = httpx.post(self.url, json=payload, timeout=self.timeout)
        if response.status_code != 200:
            raise BackendError(f"edit server returned {response.status_code}")
        data = response.json()
        return decode_png(base64.b64decode(data["image"]))

    def edit(self, image: np.ndarray, prompt: str, params: EditParams) -> np.ndarray:
        return self._post({
            "image": base64.b64encode(encode_png(image)).decode(),
            "prompt": prompt,
            "strength": params.strength,
            "guidance": params.guidance,
            "seed": params.seed,
        })

    def generate(self, prompt: str, params: EditParams, count: int) -> list[np.ndarray]:
        return [
            self._post({
                "image": None,
                "prompt": prompt,
                "strength": params.strength,
                "guidance": params.guidance,
                "seed": derive_seed(params.seed, "txt2img", prompt, k),
            })
            for k in range(count)
        ]
