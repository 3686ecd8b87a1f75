"""Transformer pair classifier for requirement dependency labels."""

from .data import LABELS, LabeledPair, PredictionRow
from .training import TrainSpec, train
from .predict import predict_pairs

__version__ = "0.1.0"

__all__ = [
    "LABELS",
    "LabeledPair",
    "PredictionRow",
    "TrainSpec",
    "train",
    "predict_pairs",
    "__version__",
]
