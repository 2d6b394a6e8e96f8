"""Bars-and-dots benchmark: data, models, shot accounting and training."""
from .dataset import BarsDotsDataset, generate_bars_dots
from .models import Model, ModelConfig, build_model
from .shots import circuits_formula, shot_table
from .training import GradientMode, TrainLog, bce_loss, gradient_dispatch, train

__all__ = [
    "BarsDotsDataset",
    "GradientMode",
    "Model",
    "ModelConfig",
    "TrainLog",
    "bce_loss",
    "build_model",
    "circuits_formula",
    "generate_bars_dots",
    "gradient_dispatch",
    "shot_table",
    "train",
]
