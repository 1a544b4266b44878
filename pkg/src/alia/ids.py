"""Content addressing for images, records, and configs."""

from __future__ import annotations

import hashlib
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image


def image_id(pixels: np.ndarray, provenance: str) -> str:
    """Stable id for an image: hash of raw pixels, shape, and provenance.

    Re-ingesting the same bytes with the same provenance yields the same id.
    """
    arr = np.ascontiguousarray(pixels)
    h = hashlib.sha256()
    h.update(str(arr.shape).encode())
    h.update(str(arr.dtype).encode())
    h.update(arr.tobytes())
    h.update(b"|")
    h.update(provenance.encode())
    return h.hexdigest()


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def text_hash(text: str, length: int = 12) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:length]


def canonical_json(obj: object) -> str:
    """Deterministic JSON used everywhere a hash or byte-identity matters."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(obj: object) -> str:
    return content_hash(canonical_json(obj).encode("utf-8"))


def encode_png(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))


class ImageStore:
    """Content-addressed image directory: ``<root>/<sha256>.png``.

    Writes are atomic (temp file + rename) so a crashed run never leaves a
    half-written image behind, and re-saving existing content is a no-op.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, digest: str) -> Path:
        return self.root / f"{digest}.png"

    def save(self, pixels: np.ndarray) -> str:
        """Store pixels, returning a ``store://`` uri keyed by content hash."""
        data = encode_png(pixels)
        digest = content_hash(data)
        path = self.path_for(digest)
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return f"store://{digest}"

    def load(self, uri: str) -> np.ndarray:
        return decode_png(self.open_bytes(uri))

    def open_bytes(self, uri: str) -> bytes:
        digest = self.digest_of(uri)
        path = self.path_for(digest)
        if not path.exists():
            raise FileNotFoundError(f"no stored image for {uri}")
        return path.read_bytes()

    @staticmethod
    def digest_of(uri: str) -> str:
        if uri.startswith("store://"):
            return uri[len("store://"):]
        return uri
