"""Stage implementations.

Each stage reads upstream artifacts plus configs, works inside a wip
directory, and lets the runner finalize (rename + hash + event). Effective
inputs fold review decisions over artifacts, so the service never has to
touch stage outputs: an edited prompt or a restored edit changes downstream
effective config hashes, which is exactly what marks those stages stale.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from alia.captioning import CaptionCache, CaptionPool, StubCaptioner, caption_dataset, sample_captions
from alia.data.manifest import load_manifest, save_manifest
from alia.data.ops import build_bias_split, class_distribution
from alia.data.preprocess import crop_preprocess
from alia.data.records import Dataset, ImageRecord
from alia.editing.backends import HttpEditBackend, StubEditBackend
from alia.editing.engine import (
    RecordStore,
    USABLE_STATUSES,
    generate_edits,
    txt2img_generate,
)
from alia.editing.params import EditParams
from alia.editing.sweep import run_sweep, select_params
from alia.errors import ConfigError, PreconditionError, ShortageError, StageFailedError
from alia.filtering.interfaces import HashZeroShot, MeanPoolEmbedder, build_embedding_index
from alia.filtering.pipeline import FilterConfig, filter_pipeline, semantic_filter
from alia.filtering.thresholds import ThresholdTable, compute_class_thresholds
from alia.ids import ImageStore, canonical_json, config_hash
from alia.pipeline.manifest import RunPaths, latest_decision
from alia.prompts import (
    DomainDescription,
    ScriptedLlm,
    TranscriptReplayClient,
    make_description,
    refine_descriptions,
    scene_llm,
    summarize_captions,
    to_instruction,
)
from alia.rng import derive_seed
from alia.training.config import TrainConfig
from alia.training.harness import build_variant_dataset
from alia.training.metrics import MetricReport, evaluate
from alia.training.trainer import CentroidTrainer, TrainedTaskClassifier
from alia.training import reference


@dataclass
class StageContext:
    paths: RunPaths
    dataset_config: dict
    pipeline_config: dict
    state: dict
    images: ImageStore

    _dataset: Dataset | None = None

    @property
    def seed(self) -> int:
        return int(self.pipeline_config.get("seed", 0))

    @property
    def backend_name(self) -> str:
        return self.pipeline_config.get("backend", "img2img")

    def dataset(self) -> Dataset:
        if self._dataset is None:
            self._dataset = load_pipeline_dataset(self.dataset_config)
        return self._dataset

    def loader(self) -> Callable[[ImageRecord], np.ndarray]:
        crop = self.dataset_config.get("crop") or {}
        top = float(crop.get("top", 0.0))
        bottom = float(crop.get("bottom", 0.0))
        images = self.images

        def load(rec: ImageRecord) -> np.ndarray:
            pixels = images.load(rec.uri)
            if top or bottom:
                pixels = crop_preprocess(pixels, top, bottom)
            return pixels

        return load

    def build_captioner(self):
        cfg = self.pipeline_config.get("captioner", {"kind": "stub"})
        if cfg.get("kind", "stub") == "stub":
            return StubCaptioner(
                superclass=self.dataset_config.get("superclass", "animal"),
                scenes=cfg.get("scenes"),
            )
        raise ConfigError(f"unknown captioner kind {cfg.get('kind')!r}", field="captioner")

    def build_llm(self):
        cfg = self.pipeline_config.get("llm", {})
        kind = cfg.get("kind", "scripted")
        if kind == "scripted":
            scenes = cfg.get("scenes") or StubCaptioner.DEFAULT_SCENES
            return scene_llm(
                self.dataset_config.get("superclass", "animal"),
                scenes,
                refined_count=int(cfg.get("refined_count", 4)),
            )
        if kind == "transcript":
            return TranscriptReplayClient(cfg["path"])
        raise ConfigError(f"unknown llm kind {kind!r}", field="llm")

    def build_editor(self):
        cfg = self.pipeline_config.get("editor", {"kind": "stub"})
        kind = cfg.get("kind", "stub")
        if kind == "stub":
            return StubEditBackend()
        if kind == "http":
            return HttpEditBackend(cfg["url"], timeout=float(cfg.get("timeout", 120.0)))
        raise ConfigError(f"unknown editor kind {kind!r}", field="editor")

    def build_zero_shot(self):
        cfg = self.pipeline_config.get("zero_shot", {"kind": "stub"})
        if cfg.get("kind", "stub") == "stub":
            return HashZeroShot(task_bias=float(cfg.get("task_bias", 0.35)))
        raise ConfigError("unknown zero_shot kind", field="zero_shot")

    def build_trainer(self) -> CentroidTrainer:
        cfg = self.pipeline_config.get("trainer", {"kind": "centroid"})
        if cfg.get("kind", "centroid") == "centroid":
            return CentroidTrainer(
                grid=int(cfg.get("grid", 4)),
                jitter=float(cfg.get("jitter", 0.01)),
            )
        raise ConfigError("unknown trainer kind", field="trainer")

    def train_config(self, variant: str = "baseline", seed: int = 0) -> TrainConfig:
        cfg = self.pipeline_config.get("train", {})
        return TrainConfig(
            variant=variant,
            learning_rate=float(cfg.get("lr", 0.001)),
            weight_decay=float(cfg.get("weight_decay", 1e-4)),
            epochs=int(cfg.get("epochs", 10)),
            seed=seed,
        )

    # ---- effective (decision-folded) inputs ----

    def effective_descriptions(self) -> list[DomainDescription]:
        prompts_file = self.paths.stage_dir("summarize") / "prompts.json"
        if not prompts_file.exists():
            raise StageFailedError("summarize artifacts missing")
        descriptions = [
            DomainDescription.from_dict(d)
            for d in json.loads(prompts_file.read_text(encoding="utf-8"))
        ]
        edit = latest_decision(self.state, "prompt-edit")
        if edit is not None:
            descriptions = [
                DomainDescription.from_dict(d) for d in edit["payload"]["descriptions"]
            ]
        return descriptions

    def backend_descriptions(self) -> list[DomainDescription]:
        """Descriptions in the syntax the configured editor expects."""
        descriptions = self.effective_descriptions()
        if self.backend_name != "instruct-pix2pix":
            return descriptions
        out = []
        for desc in descriptions:
            approval = latest_decision(
                self.state, "instruction-approval",
                lambda d: d["payload"].get("description_id") == desc.id,
            )
            if approval is not None:
                template = approval["payload"]["template"]
            else:
                template = to_instruction(desc).template
            out.append(DomainDescription(
                id=desc.id, template=template, prefix=desc.prefix,
                instruction_template=desc.instruction_template, source=desc.source,
            ))
        return out

    def effective_selection(self) -> dict | None:
        pinned = self.pipeline_config.get("selection")
        if pinned:
            return {"strength": pinned["strength"], "guidance": pinned["guidance"],
                    "chooser": "config"}
        decision = latest_decision(self.state, "param-selection")
        if decision is not None:
            payload = decision["payload"]
            return {"strength": payload["strength"], "guidance": payload["guidance"],
                    "chooser": "human"}
        return None

    def decision_digest(self, kinds: tuple[str, ...]) -> str:
        relevant = [d for d in self.state["decisions"] if d["kind"] in kinds]
        return config_hash(relevant)

    def artifact_hash_of(self, stage: str) -> str:
        return self.state["stages"][stage].get("artifact_hash") or ""


def load_pipeline_dataset(dataset_config: dict) -> Dataset:
    dataset = load_manifest(dataset_config["manifest"])
    superclass = dataset_config.get("superclass")
    if superclass and superclass != dataset.superclass:
        dataset = Dataset(dataset.records, dataset.classes, superclass)
    bias = dataset_config.get("bias_split")
    if bias:
        train = build_bias_split(
            dataset, bias["spec"], seed=int(bias.get("seed", 0)),
            tag_key=bias.get("tag_key", "background"),
        )
        others = tuple(r for r in dataset.records if r.split != "train")
        dataset = Dataset(train.records + others, dataset.classes, dataset.superclass)
    return dataset


# ---------------------------------------------------------------------------
# stage bodies; each returns a dict merged into the completion event


def stage_caption(ctx: StageContext, wip: Path) -> dict:
    dataset = ctx.dataset()
    loader = ctx.loader()
    context_images = []
    context_path = ctx.dataset_config.get("context_manifest")
    if context_path:
        context_set = load_manifest(context_path)
        context_images = [(rec.id, loader(rec)) for rec in context_set.records]
    pool = caption_dataset(
        dataset,
        ctx.build_captioner(),
        context_images=context_images,
        loader=loader,
        cache=CaptionCache(ctx.paths.cache_dir / "captions.json"),
        failure_threshold=float(ctx.pipeline_config.get("caption_failure_threshold", 0.5)),
    )
    (wip / "captions.json").write_text(canonical_json({
        "captions": list(pool.captions),
        "source_counts": pool.source_counts,
        "includes_context_only": pool.includes_context_only,
    }), encoding="utf-8")
    return {"captions": len(pool)}


def stage_summarize(ctx: StageContext, wip: Path) -> dict:
    data = json.loads(
        (ctx.paths.stage_dir("caption") / "captions.json").read_text(encoding="utf-8")
    )
    pool = CaptionPool(
        captions=tuple(data["captions"]),
        source_counts=data["source_counts"],
        includes_context_only=data["includes_context_only"],
    )
    sample_cfg = ctx.pipeline_config.get("caption_sample", {})
    sampled = sample_captions(
        pool, n=int(sample_cfg.get("n", 200)),
        seed=int(sample_cfg.get("seed", derive_seed(ctx.seed, "caption-sample"))),
    )
    llm = ctx.build_llm()
    prefix = ctx.dataset_config.get("prefix", "a photo of a thing")
    conversation = summarize_captions(sampled, prefix, llm)
    descriptions = refine_descriptions(
        conversation,
        ctx.dataset_config.get("superclass", ""),
        llm,
        class_names=ctx.dataset().classes,
        prefix=prefix,
        keep_superclass_word=bool(ctx.dataset_config.get("keep_superclass_word", True)),
    )
    (wip / "prompts.json").write_text(
        canonical_json([d.to_dict() for d in descriptions]), encoding="utf-8"
    )
    (wip / "transcript.json").write_text(
        canonical_json(conversation.to_json()), encoding="utf-8"
    )
    return {"descriptions": len(descriptions), "transcript": conversation.to_json()}


def stage_edit_sweep(ctx: StageContext, wip: Path) -> dict:
    descriptions = ctx.backend_descriptions()
    sweep_cfg = ctx.pipeline_config.get("sweep", {})
    index = int(sweep_cfg.get("description_index", 0))
    grid = run_sweep(
        ctx.dataset(),
        descriptions[index],
        sweep_cfg.get("strengths"),
        sweep_cfg.get("guidances"),
        ctx.build_editor(),
        backend_name=ctx.backend_name,
        images=ctx.images,
        loader=ctx.loader(),
        sample_size=int(sweep_cfg.get("sample_size", 10)),
        seeds=sweep_cfg.get("seeds"),
        base_seed=derive_seed(ctx.seed, "sweep"),
    )
    (wip / "grid.json").write_text(canonical_json(grid.to_json()), encoding="utf-8")
    return {"cells": grid.cell_count()}


def stage_select_params(ctx: StageContext, wip: Path) -> dict:
    selection = ctx.effective_selection()
    if selection is None:
        raise NeedsReview("no edit parameters pinned in config and no selection decision")
    from alia.editing.params import SweepGrid

    grid_file = ctx.paths.stage_dir("edit-sweep") / "grid.json"
    grid = SweepGrid.from_json(json.loads(grid_file.read_text(encoding="utf-8")))
    params = select_params(
        grid, (selection["strength"], selection["guidance"]),
        chooser=selection["chooser"], seed=ctx.seed,
    )
    (wip / "selection.json").write_text(canonical_json({
        "strength": params.strength,
        "guidance": params.guidance,
        "backend": params.backend,
        "chooser": selection["chooser"],
    }), encoding="utf-8")
    return {"selection": selection}


def stage_edit(ctx: StageContext, wip: Path) -> dict:
    selection = ctx.effective_selection()
    if selection is None:
        raise StageFailedError("no edit parameter selection available")
    params = EditParams(
        ctx.backend_name, float(selection["strength"]), float(selection["guidance"]),
        seed=derive_seed(ctx.seed, "edit"),
    )
    descriptions = ctx.backend_descriptions()
    store = RecordStore(wip / "edits")
    records = generate_edits(
        ctx.dataset(), descriptions, params, ctx.build_editor(),
        store=store, images=ctx.images, loader=ctx.loader(),
        edits_per_image=int(ctx.pipeline_config.get("edits_per_image", 2)),
        max_failure_ratio=float(ctx.pipeline_config.get("edit_failure_ratio", 0.5)),
    )

    txt2img_cfg = ctx.pipeline_config.get("txt2img", {})
    txt_count = int(txt2img_cfg.get("per_class", 0))
    txt_records = []
    if txt_count > 0:
        txt_store = RecordStore(wip / "txt2img")
        txt_records = txt2img_generate(
            txt2img_cfg["prompt"], txt_count, ctx.dataset().classes,
            EditParams("txt2img", 1.0, float(txt2img_cfg.get("guidance", 7.5)),
                       seed=derive_seed(ctx.seed, "txt2img")),
            ctx.build_editor(), store=txt_store, images=ctx.images,
        )
    return {"edits": len(records), "txt2img": len(txt_records)}


def stage_filter(ctx: StageContext, wip: Path) -> dict:
    dataset = ctx.dataset()
    loader = ctx.loader()
    trainer = ctx.build_trainer()
    baseline_config = ctx.train_config(
        "baseline", seed=derive_seed(ctx.seed, "filter-classifier")
    )
    model, _ = trainer.fit(baseline_config, dataset, loader)
    classifier = TrainedTaskClassifier(trainer, model)
    thresholds = compute_class_thresholds(classifier, dataset, loader)
    (wip / "thresholds.json").write_text(
        canonical_json(thresholds.to_dict()), encoding="utf-8"
    )

    filter_cfg = FilterConfig.from_dict(ctx.pipeline_config.get("filter", {}))
    if not filter_cfg.task_prompt:
        superclass = ctx.dataset_config.get("superclass", "thing")
        filter_cfg.task_prompt = f"a photo of a {superclass}"

    edit_dir = ctx.paths.stage_dir("edit") / "edits"
    store = RecordStore(wip / "edits")
    shutil.copy(edit_dir / "records.jsonl", store.root / "records.jsonl")
    edits = list(store.load().values())
    edits.sort(key=lambda r: r.edit_id)

    embedder = MeanPoolEmbedder()
    index = None
    if filter_cfg.knn:
        index = build_embedding_index(embedder, dataset, loader)

    outcome = filter_pipeline(
        edits, lambda rec: ctx.images.load(rec.uri), filter_cfg,
        zero_shot=ctx.build_zero_shot(),
        task_classifier=classifier,
        thresholds=thresholds,
        classes=dataset.classes,
        embedder=embedder,
        index=index,
        store=store,
    )
    (wip / "verdicts.json").write_text(canonical_json({
        edit_id: [v.to_dict() for v in trail]
        for edit_id, trail in outcome.verdicts.items()
    }), encoding="utf-8")

    # The ungrounded text-to-image pool only gets the semantic stage.
    txt_dir = ctx.paths.stage_dir("edit") / "txt2img"
    kept_txt = 0
    if (txt_dir / "records.jsonl").exists():
        txt_store = RecordStore(wip / "txt2img")
        shutil.copy(txt_dir / "records.jsonl", txt_store.root / "records.jsonl")
        txt_records = sorted(txt_store.load().values(), key=lambda r: r.edit_id)
        zs = ctx.build_zero_shot()
        transitions = {}
        for rec in txt_records:
            if rec.error is not None or rec.uri is None:
                continue
            verdict = semantic_filter(
                zs, rec, ctx.images.load(rec.uri),
                filter_cfg.task_prompt, filter_cfg.distractors,
            )
            transitions[rec.edit_id] = "kept" if verdict.keep else "filtered-semantic"
            kept_txt += int(verdict.keep)
        if transitions:
            txt_store.update_statuses(transitions)

    return {"kept": len(outcome.kept), "filtered": len(outcome.filtered),
            "txt2img_kept": kept_txt}


def _usable_pool(store_dir: Path, state: dict) -> list[ImageRecord]:
    """Filter-stage statuses with review overrides folded on top."""
    store = RecordStore(store_dir)
    records = store.load()
    overrides: dict[str, str] = {}
    for decision in state["decisions"]:
        if decision["kind"] == "filter-override":
            payload = decision["payload"]
            overrides[payload["edit_id"]] = (
                "human-restored" if payload["action"] == "restore" else "human-rejected"
            )
    pool = []
    for rec in sorted(records.values(), key=lambda r: r.edit_id):
        status = overrides.get(rec.edit_id, rec.status)
        if status in USABLE_STATUSES:
            pool.append(rec.to_image_record())
    return pool


def stage_assemble(ctx: StageContext, wip: Path) -> dict:
    dataset = ctx.dataset()
    pool = _usable_pool(ctx.paths.stage_dir("filter") / "edits", ctx.state)
    pool_set = Dataset(tuple(pool), dataset.classes, dataset.superclass)
    save_manifest(pool_set, wip / "alia_pool.jsonl")

    txt_pool: list[ImageRecord] = []
    txt_dir = ctx.paths.stage_dir("filter") / "txt2img"
    if (txt_dir / "records.jsonl").exists():
        txt_pool = _usable_pool(txt_dir, ctx.state)
        save_manifest(
            Dataset(tuple(txt_pool), dataset.classes, dataset.superclass),
            wip / "txt2img_pool.jsonl",
        )

    try:
        merged, _ = build_variant_dataset("+alia", dataset, {"+alia": pool}, ctx.seed)
    except ShortageError as exc:
        raise StageFailedError(
            f"not enough kept edits to match the held-out distribution: {exc}"
        ) from exc
    save_manifest(merged, wip / "augmented_manifest.jsonl")
    target = class_distribution(dataset, "extra")
    return {"pool": len(pool), "txt2img_pool": len(txt_pool), "added": target.total}


def _variants(ctx: StageContext) -> list[str]:
    return list(ctx.pipeline_config.get("train", {}).get("variants", ["baseline", "+alia"]))


def _load_pools(ctx: StageContext) -> dict[str, list[ImageRecord]]:
    pools: dict[str, list[ImageRecord]] = {}
    alia_pool = ctx.paths.stage_dir("assemble") / "alia_pool.jsonl"
    if alia_pool.exists():
        pools["+alia"] = list(load_manifest(alia_pool).records)
    txt_pool = ctx.paths.stage_dir("assemble") / "txt2img_pool.jsonl"
    if txt_pool.exists():
        pools["+txt2img"] = list(load_manifest(txt_pool).records)
    return pools


def stage_train(ctx: StageContext, wip: Path) -> dict:
    dataset = ctx.dataset()
    loader = ctx.loader()
    trainer = ctx.build_trainer()
    pools = _load_pools(ctx)
    train_cfg = ctx.pipeline_config.get("train", {})
    seeds = int(train_cfg.get("seeds", 3))

    base_config = ctx.train_config()
    if train_cfg.get("sweep"):
        from alia.training.config import SWEEP_LEARNING_RATES, SWEEP_WEIGHT_DECAYS
        from alia.training.harness import sweep_hyperparams

        base_config = sweep_hyperparams(
            trainer, dataset,
            train_cfg.get("lr_grid", SWEEP_LEARNING_RATES),
            train_cfg.get("wd_grid", SWEEP_WEIGHT_DECAYS),
            loader, base_config=base_config,
        )

    models_dir = wip / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    summary: dict[str, dict] = {}
    for variant in _variants(ctx):
        built, policy = build_variant_dataset(variant, dataset, pools, ctx.seed)
        val_metrics = []
        for i in range(seeds):
            run_config = TrainConfig(
                variant=variant,
                architecture=base_config.architecture,
                learning_rate=base_config.learning_rate,
                weight_decay=base_config.weight_decay,
                epochs=base_config.epochs,
                seed=derive_seed(ctx.seed, "train", variant, i),
            )
            model, val = trainer.fit(run_config, built, loader, policy=policy)
            val_metrics.append(val)
            (models_dir / f"{variant}-{i}.json").write_text(canonical_json({
                "classes": list(model["classes"]),
                "centroids": [list(map(float, row)) for row in model["centroids"]],
                "scale": float(model["scale"]),
                "config": run_config.to_dict(),
            }), encoding="utf-8")
        summary[variant] = {
            "val_metrics": val_metrics,
            "config_hash": base_config.with_variant(variant).hash(),
            "seeds": seeds,
        }
    (wip / "train_summary.json").write_text(canonical_json(summary), encoding="utf-8")
    return {"variants": _variants(ctx)}


def stage_evaluate(ctx: StageContext, wip: Path) -> dict:
    dataset = ctx.dataset()
    loader = ctx.loader()
    trainer = ctx.build_trainer()
    metric_kind = ctx.pipeline_config.get("train", {}).get("metric", "macro-F1")
    models_dir = ctx.paths.stage_dir("train") / "models"

    reports: dict[str, dict] = {}
    ledger_lines = []
    for variant in _variants(ctx):
        values = []
        per_class_runs = []
        i = 0
        while (models_dir / f"{variant}-{i}.json").exists():
            data = json.loads((models_dir / f"{variant}-{i}.json").read_text(encoding="utf-8"))
            model = {
                "classes": tuple(data["classes"]),
                "centroids": np.array(data["centroids"]),
                "scale": data["scale"],
            }
            report = evaluate(trainer, model, dataset, metric_kind, loader)
            values.append(report.mean)
            per_class_runs.append(report.per_class)
            ledger_lines.append({
                "config_hash": config_hash(data["config"]),
                "variant": variant,
                "seed": data["config"]["seed"],
                "metric": metric_kind,
                "value": report.mean,
            })
            i += 1
        if not values:
            raise StageFailedError(f"no trained models found for variant {variant}")
        reports[variant] = MetricReport.from_seeds(metric_kind, values, per_class_runs).to_dict()

    (wip / "reports.json").write_text(canonical_json(reports), encoding="utf-8")
    (wip / "ledger.jsonl").write_text(
        "".join(canonical_json(line) + "\n" for line in ledger_lines), encoding="utf-8"
    )
    return {"metric": metric_kind}


def stage_report(ctx: StageContext, wip: Path) -> dict:
    reports = json.loads(
        (ctx.paths.stage_dir("evaluate") / "reports.json").read_text(encoding="utf-8")
    )
    summary = {
        "run_id": ctx.paths.run_id,
        "variants": reports,
        "reference": {
            "prompt_filtering": reference.PROMPT_FILTERING_REFERENCE,
            "edit_method": reference.EDIT_METHOD_REFERENCE,
            "split_sizes": reference.SPLIT_SIZE_REFERENCE,
        },
    }
    (wip / "report.json").write_text(canonical_json(summary), encoding="utf-8")

    lines = [
        "# Augmentation run report",
        "",
        f"Run: `{ctx.paths.run_id}`",
        "",
        "## Variant results",
        "",
        "| variant | metric | mean | std | seeds |",
        "|---|---|---|---|---|",
    ]
    for variant, report in reports.items():
        lines.append(
            f"| {variant} | {report['kind']} | {report['mean']:.4f} "
            f"| {report['std']:.4f} | {len(report['per_seed'])} |"
        )
    lines += [
        "",
        "## Published full-scale reference (not reproduced at desk scale)",
        "",
        "| dataset | user prompt | generated prompts | generated + filtering |",
        "|---|---|---|---|",
    ]
    for name, row in reference.PROMPT_FILTERING_REFERENCE.items():
        lines.append(
            f"| {name} | {row['user-prompt'][0]}±{row['user-prompt'][1]} "
            f"| {row['alia-prompts'][0]}±{row['alia-prompts'][1]} "
            f"| {row['alia-prompts+filtering'][0]}±{row['alia-prompts+filtering'][1]} |"
        )
    (wip / "report.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"variants": list(reports)}


class NeedsReview(Exception):
    """Raised by a stage that must block for an operator decision."""


STAGE_BODIES = {
    "caption": stage_caption,
    "summarize": stage_summarize,
    "edit-sweep": stage_edit_sweep,
    "select-params": stage_select_params,
    "edit": stage_edit,
    "filter": stage_filter,
    "assemble": stage_assemble,
    "train": stage_train,
    "evaluate": stage_evaluate,
    "report": stage_report,
}


def effective_config(ctx: StageContext, stage: str) -> dict:
    """Inputs that should invalidate a stage when they change."""
    p = ctx.pipeline_config
    d = ctx.dataset_config
    if stage == "caption":
        return {"dataset": d, "captioner": p.get("captioner"),
                "threshold": p.get("caption_failure_threshold")}
    if stage == "summarize":
        return {"llm": p.get("llm"), "sample": p.get("caption_sample"),
                "prefix": d.get("prefix"), "keep": d.get("keep_superclass_word"),
                "upstream": ctx.artifact_hash_of("caption")}
    if stage == "edit-sweep":
        return {"sweep": p.get("sweep"), "backend": ctx.backend_name,
                "editor": p.get("editor"),
                "upstream": ctx.artifact_hash_of("summarize"),
                "decisions": ctx.decision_digest(("prompt-edit", "instruction-approval"))}
    if stage == "select-params":
        return {"selection": ctx.effective_selection(),
                "upstream": ctx.artifact_hash_of("edit-sweep")}
    if stage == "edit":
        return {"selection": ctx.effective_selection(),
                "edits_per_image": p.get("edits_per_image", 2),
                "backend": ctx.backend_name, "editor": p.get("editor"),
                "txt2img": p.get("txt2img"),
                "upstream": ctx.artifact_hash_of("summarize"),
                "decisions": ctx.decision_digest(("prompt-edit", "instruction-approval"))}
    if stage == "filter":
        return {"filter": p.get("filter"), "trainer": p.get("trainer"),
                "train": p.get("train"),
                "upstream": ctx.artifact_hash_of("edit")}
    if stage == "assemble":
        return {"upstream": ctx.artifact_hash_of("filter"),
                "decisions": ctx.decision_digest(("filter-override",)),
                "seed": ctx.seed}
    if stage == "train":
        return {"train": p.get("train"), "trainer": p.get("trainer"),
                "upstream": ctx.artifact_hash_of("assemble")}
    if stage == "evaluate":
        return {"metric": p.get("train", {}).get("metric"),
                "upstream": ctx.artifact_hash_of("train")}
    if stage == "report":
        return {"upstream": ctx.artifact_hash_of("evaluate")}
    raise PreconditionError(f"unknown stage {stage!r}")
