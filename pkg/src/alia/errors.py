"""Exception types shared across the pipeline."""

from __future__ import annotations


class AliaError(Exception):
    """Base class for all pipeline errors."""


class MalformedManifestError(AliaError):
    """Manifest file failed to parse; message names the offending line."""


class IntegrityError(AliaError):
    """Dataset-level invariant violated (duplicate id, dangling parent, ...)."""


class ShortageError(AliaError):
    """A sampling pool cannot cover the requested per-class counts."""

    def __init__(self, deficits: dict[str, int]):
        self.deficits = dict(deficits)
        detail = ", ".join(f"{k}: short {v}" for k, v in sorted(self.deficits.items()))
        super().__init__(f"insufficient pool for {detail}")


class DegenerateCropError(AliaError):
    """Crop fractions leave zero image rows."""


class PreconditionError(AliaError):
    """An operation was called with inputs violating its contract."""


class ParamRangeError(AliaError):
    """Edit parameter outside the backend's documented range."""


class EmptyDescriptionsError(AliaError):
    """Language-model reply produced no valid domain descriptions."""


class MissingClassError(AliaError):
    """A dataset class has no training images where one is required."""


class ConfigError(AliaError):
    """Invalid or incomplete configuration; message names the field."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message)


class OrderingError(AliaError):
    """A pipeline stage was requested before its dependencies completed."""


class StageFailedError(AliaError):
    """A pipeline stage raised; diagnostics are captured in the run manifest."""


class UnknownRunError(AliaError):
    """No run manifest exists for the given run id."""


class ConflictError(AliaError):
    """A review decision referenced state that has since been re-run."""


class TranscriptMismatchError(AliaError):
    """Replayed conversation diverged from the recorded transcript."""


class BackendError(AliaError):
    """A model backend (captioner, llm, editor, trainer) failed."""


class RetryableError(BackendError):
    """Transport-level failure worth retrying with backoff."""
