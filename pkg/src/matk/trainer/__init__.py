"""Training loop, checkpoints and evaluation metrics."""

from .checkpoint import (
    Checkpoint,
    load_checkpoint,
    restore_adapter,
    save_checkpoint,
    spec_from_dict,
)
from .loop import make_optimizer, train
from .metrics import MetricsReport, accuracy, auroc, evaluate

__all__ = [
    "Checkpoint",
    "MetricsReport",
    "accuracy",
    "auroc",
    "evaluate",
    "load_checkpoint",
    "make_optimizer",
    "restore_adapter",
    "save_checkpoint",
    "spec_from_dict",
    "train",
]
