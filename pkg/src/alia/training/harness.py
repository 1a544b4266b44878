"""Training harness: hyperparameter sweeps, the variant matrix with the
class-parity rule, and the append-only results ledger."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from alia.data.ops import class_distribution, merge_augmented, sample_to_match
from alia.data.records import Dataset, ImageRecord
from alia.errors import IntegrityError, PreconditionError, StageFailedError
from alia.ids import canonical_json
from alia.rng import derive_seed
from alia.training.config import TrainConfig
from alia.training.metrics import MetricReport, evaluate
from alia.training.policies import POLICIES
from alia.training.trainer import TrainerBackend

log = logging.getLogger(__name__)

ADDITIVE_VARIANTS = ("+alia", "+real", "+txt2img")


class ResultsLedger:
    """One JSONL line per (config, seed) run: config hash, seed, metric, value."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, config: TrainConfig, metric_kind: str, value: float) -> None:
        entry = {
            "config_hash": config.hash(),
            "variant": config.variant,
            "seed": config.seed,
            "metric": metric_kind,
            "value": value,
        }
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(canonical_json(entry) + "\n")

    def entries(self) -> list[dict]:
        import json

        if not self.path.exists():
            return []
        return [
            json.loads(line)
            for line in self.path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]


def sweep_hyperparams(
    trainer: TrainerBackend,
    dataset: Dataset,
    lr_grid: Sequence[float],
    wd_grid: Sequence[float],
    loader: Callable[[ImageRecord], np.ndarray],
    *,
    base_config: TrainConfig | None = None,
) -> TrainConfig:
    """Train every (lr, wd) grid point and keep the best validation score.

    Ties break to the lower learning rate, then the lower weight decay; the
    winner is reused across all variants. Failed grid points are skipped with
    a diagnostic; every point failing is an error.
    """
    if not lr_grid or not wd_grid:
        raise PreconditionError("sweep grids must be non-empty")
    base = base_config or TrainConfig()
    best: tuple[float, TrainConfig] | None = None
    failures = 0
    for lr in sorted(lr_grid):
        for wd in sorted(wd_grid):
            config = TrainConfig(
                variant=base.variant, architecture=base.architecture,
                learning_rate=lr, weight_decay=wd, epochs=base.epochs,
                seed=base.seed, optimizer=base.optimizer,
            )
            try:
                _, val = trainer.fit(config, dataset, loader)
            except Exception as exc:
                failures += 1
                log.warning("sweep point (lr=%g, wd=%g) failed: %s", lr, wd, exc)
                continue
            if best is None or val > best[0]:
                best = (val, config)
    if best is None:
        raise StageFailedError(f"all {failures} sweep points failed")
    return best[1]


def _assert_parity(added: Sequence[ImageRecord], target) -> None:
    got: dict[str, int] = {}
    for rec in added:
        got[rec.label] = got.get(rec.label, 0) + 1
    want = {c: n for c, n in target.items() if n > 0}
    if got != want:
        raise IntegrityError(
            f"parity violation: added per-class counts {got} != target {want}"
        )


def build_variant_dataset(
    variant: str,
    base: Dataset,
    pools: Mapping[str, Sequence[ImageRecord]],
    seed: int,
) -> tuple[Dataset, object | None]:
    """Dataset plus optional in-training policy for one variant.

    Additive variants sample their pool to match the +Real per-class
    distribution exactly (asserted); policy variants leave the data alone.
    """
    if variant == "baseline":
        return base, None
    if variant in POLICIES:
        return base, POLICIES[variant]()
    if variant not in ADDITIVE_VARIANTS:
        raise PreconditionError(f"unknown variant {variant!r}")

    target = class_distribution(base, "extra")
    if variant == "+real":
        # The held-out real images already live in the dataset's extra split;
        # adding them means re-homing that split into train.
        _assert_parity(base.split_records("extra"), target)
        records = tuple(
            r.with_split("train") if r.split == "extra" else r for r in base.records
        )
        return Dataset(records=records, classes=base.classes, superclass=base.superclass), None

    pool = pools.get(variant, ())
    if not pool:
        raise PreconditionError(f"no augmentation pool supplied for {variant}")
    added = sample_to_match(pool, target, seed=derive_seed(seed, "variant", variant))
    _assert_parity(added, target)
    return merge_augmented(base, added), None


def run_variant(
    variant: str,
    base: Dataset,
    pools: Mapping[str, Sequence[ImageRecord]],
    trainer: TrainerBackend,
    loader: Callable[[ImageRecord], np.ndarray],
    *,
    config: TrainConfig | None = None,
    metric_kind: str = "macro-F1",
    seeds: int = 3,
    seed_base: int = 0,
    ledger: ResultsLedger | None = None,
) -> MetricReport:
    """Train one variant across seeds and aggregate the test metric."""
    config = config or TrainConfig()
    dataset, policy = build_variant_dataset(variant, base, pools, seed_base)
    values: list[float] = []
    per_class_runs: list[dict[str, float]] = []
    for i in range(seeds):
        run_config = config.with_variant(variant).with_seed(
            derive_seed(seed_base, "train", variant, i)
        )
        model, _ = trainer.fit(run_config, dataset, loader, policy=policy)
        report = evaluate(trainer, model, dataset, metric_kind, loader, split="test")
        values.append(report.mean)
        per_class_runs.append(report.per_class)
        if ledger is not None:
            ledger.append(run_config, metric_kind, report.mean)
    return MetricReport.from_seeds(metric_kind, values, per_class_runs)
