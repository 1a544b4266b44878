from alia.pipeline.manifest import STAGES, RunPaths, append_event, fold_status, read_events
from alia.pipeline.runner import PipelineRunner, init_run

__all__ = [
    "STAGES",
    "RunPaths",
    "append_event",
    "read_events",
    "fold_status",
    "init_run",
    "PipelineRunner",
]
