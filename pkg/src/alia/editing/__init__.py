from alia.editing.params import BACKENDS, EditParams, SweepGrid
from alia.editing.backends import EditBackend, HttpEditBackend, StubEditBackend
from alia.editing.engine import (
    AugmentationRecord,
    RecordStore,
    derive_edit_seed,
    generate_edits,
    txt2img_generate,
)
from alia.editing.sweep import run_sweep, select_params

__all__ = [
    "BACKENDS",
    "EditParams",
    "SweepGrid",
    "EditBackend",
    "StubEditBackend",
    "HttpEditBackend",
    "AugmentationRecord",
    "RecordStore",
    "derive_edit_seed",
    "generate_edits",
    "txt2img_generate",
    "run_sweep",
    "select_params",
]
