"""Inference sidecar for text-to-text semantic parsing backends."""

from .server import ServerSettings, create_app
from .train import (
    PairsFormatError,
    TrainConfig,
    TrainingUnavailable,
    grid_configs,
    read_pairs,
    train_model,
)

__version__ = "0.1.0"

__all__ = [
    "PairsFormatError",
    "ServerSettings",
    "TrainConfig",
    "TrainingUnavailable",
    "create_app",
    "grid_configs",
    "read_pairs",
    "train_model",
]
