"""Semantics-preserving positive-variant generation."""

from .engine import (
    TRANSFORMS,
    TransformRecord,
    alpha_equivalent,
    applicable_transforms,
    canonical_internal_rename,
    internal_net_names,
    transform,
)

__all__ = [
    "TRANSFORMS",
    "TransformRecord",
    "alpha_equivalent",
    "applicable_transforms",
    "canonical_internal_rename",
    "internal_net_names",
    "transform",
]
