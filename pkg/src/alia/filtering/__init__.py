from alia.filtering.interfaces import (
    EmbeddingIndex,
    HashZeroShot,
    ImageEmbedder,
    MeanPoolEmbedder,
    TaskClassifier,
    ZeroShotClassifier,
    build_embedding_index,
)
from alia.filtering.thresholds import ThresholdTable, compute_class_thresholds
from alia.filtering.pipeline import (
    DEFAULT_SEMANTIC_DISTRACTORS,
    FilterConfig,
    FilterOutcome,
    FilterVerdict,
    confidence_filter,
    filter_pipeline,
    knn_filter,
    semantic_filter,
)

__all__ = [
    "ZeroShotClassifier",
    "TaskClassifier",
    "ImageEmbedder",
    "EmbeddingIndex",
    "MeanPoolEmbedder",
    "HashZeroShot",
    "build_embedding_index",
    "ThresholdTable",
    "compute_class_thresholds",
    "FilterVerdict",
    "FilterConfig",
    "FilterOutcome",
    "DEFAULT_SEMANTIC_DISTRACTORS",
    "semantic_filter",
    "confidence_filter",
    "knn_filter",
    "filter_pipeline",
]
