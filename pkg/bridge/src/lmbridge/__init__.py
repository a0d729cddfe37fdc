"""lmbridge: line-JSON bridge exposing causal language models."""

__version__ = "0.1.0"
