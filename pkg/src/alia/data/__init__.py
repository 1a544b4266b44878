from alia.data.records import ClassDistribution, Dataset, ImageRecord, PROVENANCES, SPLITS
from alia.data.manifest import load_manifest, save_manifest
from alia.data.ops import (
    build_bias_split,
    class_distribution,
    merge_augmented,
    sample_to_match,
)
from alia.data.preprocess import crop_preprocess

__all__ = [
    "ClassDistribution",
    "Dataset",
    "ImageRecord",
    "PROVENANCES",
    "SPLITS",
    "load_manifest",
    "save_manifest",
    "class_distribution",
    "sample_to_match",
    "merge_augmented",
    "build_bias_split",
    "crop_preprocess",
]
