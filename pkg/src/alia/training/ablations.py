"""Ablation runners: prompt quality, augmentation quantity, and edit-method
choice, each built on the same variant harness."""

from __future__ import annotations

import logging
from typing import Callable, Mapping, Sequence

import numpy as np

from alia.data.ops import class_distribution, merge_augmented, sample_to_match
from alia.data.records import ClassDistribution, Dataset, ImageRecord
from alia.errors import PreconditionError, ShortageError
from alia.rng import derive_seed
from alia.training.config import TrainConfig
from alia.training.harness import run_variant
from alia.training.metrics import MetricReport, evaluate
from alia.training.trainer import TrainerBackend

log = logging.getLogger(__name__)

PROMPT_QUALITY_COLUMNS = ("user-prompt", "alia-prompts", "alia-prompts+filtering")


def ablation_prompt_quality(
    base: Dataset,
    pools: Mapping[str, Sequence[ImageRecord]],
    trainer: TrainerBackend,
    loader,
    *,
    config: TrainConfig | None = None,
    metric_kind: str = "macro-F1",
    seeds: int = 3,
    seed_base: int = 0,
) -> dict[str, MetricReport]:
    """Three-column comparison: handcrafted prompt edits, generated-prompt
    edits unfiltered, and generated-prompt edits after filtering.

    ``pools`` must carry all three column pools keyed by PROMPT_QUALITY_COLUMNS.
    """
    missing = [c for c in PROMPT_QUALITY_COLUMNS if c not in pools]
    if missing:
        raise PreconditionError(f"missing prompt-quality pools: {missing}")
    out: dict[str, MetricReport] = {}
    for column in PROMPT_QUALITY_COLUMNS:
        out[column] = run_variant(
            "+alia", base, {"+alia": pools[column]}, trainer, loader,
            config=config, metric_kind=metric_kind, seeds=seeds,
            seed_base=derive_seed(seed_base, "prompt-quality", column),
        )
    return out


def ablation_quantity(
    base: Dataset,
    pool: Sequence[ImageRecord],
    fractions: Sequence[float],
    trainer: TrainerBackend,
    loader,
    *,
    config: TrainConfig | None = None,
    metric_kind: str = "macro-F1",
    seeds: int = 1,
    seed_base: int = 0,
) -> list[tuple[float, MetricReport]]:
    """Metric as a function of how much generated data is added.

    Each fraction adds round(fraction * per-class train count) images per
    class; a fraction the pool cannot cover is skipped with a diagnostic.
    """
    config = config or TrainConfig()
    train_dist = class_distribution(base, "train")
    curve: list[tuple[float, MetricReport]] = []
    for fraction in fractions:
        target = ClassDistribution({
            cls: round(fraction * count) for cls, count in train_dist.items()
        })
        try:
            added = sample_to_match(
                pool, target, seed=derive_seed(seed_base, "quantity", fraction)
            )
        except ShortageError as exc:
            log.warning("fraction %.3f skipped: %s", fraction, exc)
            continue
        dataset = merge_augmented(base, added) if added else base
        values = []
        per_class_runs = []
        for i in range(seeds):
            run_config = config.with_seed(derive_seed(seed_base, "quantity", fraction, i))
            model, _ = trainer.fit(run_config, dataset, loader)
            report = evaluate(trainer, model, dataset, metric_kind, loader)
            values.append(report.mean)
            per_class_runs.append(report.per_class)
        curve.append((fraction, MetricReport.from_seeds(metric_kind, values, per_class_runs)))
    return curve


def ablation_edit_method(
    base: Dataset,
    pools: Mapping[str, Sequence[ImageRecord]],
    trainer: TrainerBackend,
    loader,
    *,
    config: TrainConfig | None = None,
    metric_kind: str = "macro-F1",
    seeds: int = 3,
    seed_base: int = 0,
) -> dict[str, MetricReport]:
    """Same descriptions, two editing backends, identical training configs."""
    for backend in ("img2img", "instruct-pix2pix"):
        if not pools.get(backend):
            raise PreconditionError(f"missing augmentation pool for {backend}")
    out: dict[str, MetricReport] = {}
    for backend in ("img2img", "instruct-pix2pix"):
        out[backend] = run_variant(
            "+alia", base, {"+alia": pools[backend]}, trainer, loader,
            config=config, metric_kind=metric_kind, seeds=seeds,
            seed_base=seed_base,
        )
    return out
