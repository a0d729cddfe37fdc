"""Sequence pooling over hidden-state matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteInputError


@dataclass
class HiddenMatrix:
    """L x D matrix of hidden states for one (partial) sequence."""

    values: np.ndarray
    layer_tag: str = "final"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise ValueError("hidden matrix must be L x D with L, D >= 1")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteInputError("hidden matrix contains non-finite entries")

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass
class Embedding:
    values: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteInputError("embedding contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def max_pool(h: HiddenMatrix) -> Embedding:
    """Columnwise maximum over the sequence dimension."""
    return Embedding(np.max(h.values, axis=0))
