"""Trainable validity classifier with threshold sweeping."""

from .model import ClassifierModel, sigmoid
from .sweep import DEFAULT_GRID, confusion, metrics, sweep_threshold, weighted_f1
from .train import TrainConfig, TrainHistory, batch_loss_and_grads, bce_loss, split_dataset, train

__all__ = [
    "ClassifierModel", "sigmoid", "DEFAULT_GRID", "confusion", "metrics",
    "sweep_threshold", "weighted_f1", "TrainConfig", "TrainHistory",
    "batch_loss_and_grads", "bce_loss", "split_dataset", "train",
]
