"""Hybrid feature assembly: pooled semantic vector + 14 statistical features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..emb import Embedding, HiddenMatrix, max_pool
from .stats import STAT_DIM, FeatureParams, StatFeatures, TokenStep, compute_stats


@dataclass(frozen=True)
class NormalizationProfile:
    """Per-feature mean/std used to standardise the statistical block.

    Zero-variance features use std 1.0 so apply/invert round-trips exactly.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, stat_matrix: np.ndarray) -> "NormalizationProfile":
        stat_matrix = np.asarray(stat_matrix, dtype=np.float64)
        mean = stat_matrix.mean(axis=0)
        std = stat_matrix.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean=mean, std=std)

    @classmethod
    def identity(cls, dim: int = STAT_DIM) -> "NormalizationProfile":
        return cls(mean=np.zeros(dim), std=np.ones(dim))

    def apply(self, v_stat: np.ndarray) -> np.ndarray:
        return (np.asarray(v_stat, dtype=np.float64) - self.mean) / self.std

    def invert(self, standardized: np.ndarray) -> np.ndarray:
        return np.asarray(standardized, dtype=np.float64) * self.std + self.mean


@dataclass
class HybridFeature:
    v_sem: Embedding
    v_stat: StatFeatures

    @property
    def combined(self) -> np.ndarray:
        """[v_sem; v_stat] in that order (raw, unstandardised stats)."""
        return np.concatenate([self.v_sem.values, self.v_stat.as_vector()])

    @property
    def dim(self) -> int:
        return self.v_sem.dim + STAT_DIM


def compute_hybrid(
    h: HiddenMatrix,
    steps: list[TokenStep],
    params: FeatureParams | None = None,
    profile: NormalizationProfile | None = None,
) -> HybridFeature:
    """Pool the hidden matrix and concatenate the statistical block.

    Standardisation normally lives inside the classifier (which carries its
    training profile); pass `profile` only when producing pre-standardised
    vectors for an external consumer.
    """
    v_sem = max_pool(h)
    v_stat = compute_stats(steps, params)
    if profile is not None:
        v_stat = StatFeatures.from_vector(profile.apply(v_stat.as_vector()))
    return HybridFeature(v_sem=v_sem, v_stat=v_stat)
