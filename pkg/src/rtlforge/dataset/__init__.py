"""Contrastive triplet dataset: corpus, builder, serialization."""

from .builder import BuildConfig, BuildReport, TripletSample, build
from .corpus import (
    CATEGORIES,
    CATEGORY_BY_MODULE,
    MODULE_NAMES,
    CorpusEntry,
    bundled_corpus,
    corpus_dir,
    load_corpus,
)
from .io import read_triplets, write_triplets

__all__ = [
    "BuildConfig", "BuildReport", "TripletSample", "build", "CATEGORIES",
    "CATEGORY_BY_MODULE", "MODULE_NAMES", "CorpusEntry", "bundled_corpus",
    "corpus_dir", "load_corpus", "read_triplets", "write_triplets",
]
