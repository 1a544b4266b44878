from alia.training.config import TrainConfig, VARIANTS
from alia.training.metrics import (
    MetricReport,
    balanced_accuracy,
    evaluate,
    macro_f1,
)
from alia.training.trainer import (
    CentroidTrainer,
    PlantedAccuracyTrainer,
    PlantedSurfaceTrainer,
    TrainerBackend,
    TrainedTaskClassifier,
)
from alia.training.policies import CutMixPolicy, RandAugmentPolicy
from alia.training.harness import ResultsLedger, run_variant, sweep_hyperparams
from alia.training.ablations import (
    ablation_edit_method,
    ablation_prompt_quality,
    ablation_quantity,
)

__all__ = [
    "TrainConfig",
    "VARIANTS",
    "MetricReport",
    "macro_f1",
    "balanced_accuracy",
    "evaluate",
    "TrainerBackend",
    "CentroidTrainer",
    "PlantedSurfaceTrainer",
    "PlantedAccuracyTrainer",
    "TrainedTaskClassifier",
    "CutMixPolicy",
    "RandAugmentPolicy",
    "ResultsLedger",
    "run_variant",
    "sweep_hyperparams",
    "ablation_prompt_quality",
    "ablation_quantity",
    "ablation_edit_method",
]
