"""Token-level uncertainty features and hybrid vectors."""

from .hybrid import HybridFeature, NormalizationProfile, compute_hybrid
from .io import load_feature_matrix, read_feature_lines, write_feature_lines
from .stats import (
    FEATURE_NAMES,
    STAT_DIM,
    TOKEN_CLASSES,
    FeatureParams,
    StatFeatures,
    TokenStep,
    classify_token_text,
    compute_stats,
)

__all__ = [
    "HybridFeature", "NormalizationProfile", "compute_hybrid", "FEATURE_NAMES",
    "STAT_DIM", "TOKEN_CLASSES", "FeatureParams", "StatFeatures", "TokenStep",
    "classify_token_text", "compute_stats", "load_feature_matrix",
    "read_feature_lines", "write_feature_lines",
]
