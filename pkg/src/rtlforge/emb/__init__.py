"""Embedding math: pooling, triplet loss, PCA reporting."""

from .loss import triplet_loss, triplet_loss_grad
from .pca import SeparabilityReport, pca_project, separability_report, silhouette_two_groups
from .pooling import Embedding, HiddenMatrix, max_pool

__all__ = [
    "triplet_loss", "triplet_loss_grad", "SeparabilityReport", "pca_project",
    "separability_report", "silhouette_two_groups", "Embedding",
    "HiddenMatrix", "max_pool",
]
