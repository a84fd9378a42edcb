"""Core numerics: matrices, losses, noise, models, training and diagnostics."""
from .dataset import LabeledDataset
from .losses import CompiledLoss, LossKind, LossSpec
from .matrices import SmearingMatrix, SmearingMethod, TransitionMatrix
from .metrics import RunReport
from .models import LinearModel, MlpModel
from .training import TrainConfig, TrainHistory

__all__ = [
    "LabeledDataset",
    "CompiledLoss",
    "LossKind",
    "LossSpec",
    "SmearingMatrix",
    "SmearingMethod",
    "TransitionMatrix",
    "RunReport",
    "LinearModel",
    "MlpModel",
    "TrainConfig",
    "TrainHistory",
]
