"""Run manifests.

A run's entire history is one append-only JSONL event log; status is a pure
fold over it, so replaying the log always reproduces state byte-identically.
Review decisions enter the same log, which is how a parameter selection can
resolve a blocked stage without any service writing into stage artifacts.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from alia.errors import UnknownRunError
from alia.ids import canonical_json, content_hash

STAGES = (
    "caption",
    "summarize",
    "edit-sweep",
    "select-params",
    "edit",
    "filter",
    "assemble",
    "train",
    "evaluate",
    "report",
)

DECISION_KINDS = (
    "param-selection",
    "prompt-edit",
    "filter-override",
    "instruction-approval",
)


@dataclass(frozen=True)
class RunPaths:
    """Filesystem layout of one run under the artifact root."""

    root: Path
    run_id: str

    @property
    def run_dir(self) -> Path:
        return self.root / "runs" / self.run_id

    @property
    def events(self) -> Path:
        return self.run_dir / "events.jsonl"

    @property
    def lock(self) -> Path:
        return self.run_dir / ".writer.lock"

    @property
    def cache_dir(self) -> Path:
        return self.run_dir / "cache"

    @property
    def image_store_dir(self) -> Path:
        return self.root / "images"

    def stage_dir(self, stage: str) -> Path:
        return self.run_dir / "artifacts" / stage

    def wip_dir(self, stage: str) -> Path:
        return self.run_dir / "artifacts" / f".wip-{stage}"

    def exists(self) -> bool:
        return self.events.exists()


def write_lock(paths: RunPaths) -> FileLock:
    """One writer per run; readers never take the lock."""
    paths.run_dir.mkdir(parents=True, exist_ok=True)
    return FileLock(str(paths.lock))


def append_event(paths: RunPaths, kind: str, **payload) -> dict:
    paths.run_dir.mkdir(parents=True, exist_ok=True)
    existing = read_events(paths) if paths.events.exists() else []
    event = {"seq": len(existing), "ts": time.time(), "kind": kind, **payload}
    with paths.events.open("a", encoding="utf-8") as fh:
        fh.write(canonical_json(event) + "\n")
        fh.flush()
    return event


def read_events(paths: RunPaths) -> list[dict]:
    if not paths.events.exists():
        raise UnknownRunError(f"no run at {paths.run_dir}")
    return [
        json.loads(line)
        for line in paths.events.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def hash_directory(path: Path) -> str:
    """Content hash of a stage directory: sorted (relative path, file hash)."""
    if not path.exists():
        return ""
    entries = []
    for file in sorted(p for p in path.rglob("*") if p.is_file()):
        entries.append((str(file.relative_to(path)), content_hash(file.read_bytes())))
    return content_hash(canonical_json(entries).encode())


def fold_status(events: list[dict]) -> dict:
    """Pure fold of the event log into the run's current state."""
    state: dict = {
        "run_id": None,
        "stages": {
            stage: {
                "state": "pending",
                "config_hash": None,
                "artifact_hash": None,
            }
            for stage in STAGES
        },
        "review": [],
        "decisions": [],
        "transcripts": [],
    }
    for event in events:
        kind = event["kind"]
        if kind == "run-init":
            state["run_id"] = event["run_id"]
            state["dataset_config"] = event["dataset_config"]
            state["pipeline_config"] = event["pipeline_config"]
        elif kind == "stage-started":
            row = state["stages"][event["stage"]]
            row["state"] = "running"
            row["config_hash"] = event.get("config_hash")
        elif kind == "stage-complete":
            row = state["stages"][event["stage"]]
            row["state"] = "complete"
            row["config_hash"] = event.get("config_hash")
            row["artifact_hash"] = event.get("artifact_hash")
        elif kind == "stage-failed":
            row = state["stages"][event["stage"]]
            row["state"] = "failed"
            row["error"] = event.get("error")
        elif kind == "stage-needs-review":
            row = state["stages"][event["stage"]]
            row["state"] = "needs-review"
            state["review"].append(
                {"stage": event["stage"], "reason": event.get("reason", "")}
            )
        elif kind == "prompt-transcript":
            state["transcripts"].append(
                {"stage": event["stage"], "messages": event["messages"]}
            )
        elif kind == "decision":
            decision = event["decision"]
            state["decisions"].append(decision)
            if decision["kind"] == "param-selection":
                row = state["stages"]["select-params"]
                if row["state"] in ("needs-review", "complete"):
                    row["state"] = "complete"
                    row["artifact_hash"] = content_hash(
                        canonical_json(decision["payload"]).encode()
                    )
                state["review"] = [
                    item for item in state["review"] if item["stage"] != "select-params"
                ]
    return state


def status_json(paths: RunPaths) -> str:
    """Canonical serialization of the folded state, for byte-exact replay checks."""
    return canonical_json(fold_status(read_events(paths)))


def latest_decision(state: dict, kind: str, predicate=None) -> dict | None:
    """Most recent decision of a kind; earlier ones stay in the audit trail."""
    for decision in reversed(state["decisions"]):
        if decision["kind"] == kind and (predicate is None or predicate(decision)):
            return decision
    return None
