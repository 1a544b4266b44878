"""Training configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from alia.errors import ConfigError
from alia.ids import config_hash

VARIANTS = ("baseline", "+alia", "+real", "+txt2img", "+cutmix", "+randaug")

# Shared sweep grids: every dataset sweeps the same learning rates and decays,
# and the winning pair is reused across all variants.
SWEEP_LEARNING_RATES = (0.00001, 0.0001, 0.001, 0.01, 0.1)
SWEEP_WEIGHT_DECAYS = (1e-5, 1e-4, 1e-3, 1e-2)


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "baseline"
    architecture: str = "centroid-probe"
    learning_rate: float = 0.001
    weight_decay: float = 1e-4
    epochs: int = 10
    seed: int = 0
    optimizer: str = "adam-cosine"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}", field="variant")
        if self.epochs <= 0:
            raise ConfigError("epochs must be positive", field="epochs")

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)

    def with_variant(self, variant: str) -> "TrainConfig":
        return replace(self, variant=variant)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        return config_hash(self.to_dict())
