"""Threshold sweeping and classification metrics.

The bare precision/recall/f1 keys follow the binary convention (positive
class = valid code); *_weighted variants average per-class scores weighted
by support. The sweep optimises weighted F1 over P(valid); ties break toward
the threshold nearest 0.5.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateDatasetError
from .model import ClassifierModel

DEFAULT_GRID = np.linspace(0.0, 1.0, 1001)


def confusion(predictions, labels, tau: float) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with prediction = 1 iff score >= tau."""
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    pred = p >= tau
    pos = y == 1.0
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    fn = int(np.sum(~pred & pos))
    tn = int(np.sum(~pred & ~pos))
    return tp, fp, fn, tn


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def metrics(predictions, labels, tau: float = 0.5) -> dict[str, float]:
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if p.size == 0 or p.shape != y.shape:
        raise ValueError("predictions and labels must be equal-length and non-empty")
    tp, fp, fn, tn = confusion(p, y, tau)
    prec1, rec1, f1_1 = _prf(tp, fp, fn)
    prec0, rec0, f1_0 = _prf(tn, fn, fp)  # negative class: swap roles
    n = len(y)
    support1 = tp + fn
    support0 = tn + fp
    return {
        "precision": prec1,
        "recall": rec1,
        "f1": f1_1,
        "accuracy": (tp + tn) / n,
        "precision_weighted": (support1 * prec1 + support0 * prec0) / n,
        "recall_weighted": (support1 * rec1 + support0 * rec0) / n,
        "f1_weighted": (support1 * f1_1 + support0 * f1_0) / n,
    }


def weighted_f1(predictions, labels, tau: float) -> float:
    return metrics(predictions, labels, tau)["f1_weighted"]


def sweep_threshold(
    model: ClassifierModel | None,
    x_val,
    y_val,
    grid=None,
    scores=None,
) -> tuple[float, float, list[tuple[float, float]]]:
    """Evaluate weighted F1 at each grid threshold over P(valid).

    Pass either a model plus raw feature vectors, or precomputed `scores`.
    Returns (best_tau, best_f1, curve).
    """
    y = np.asarray(y_val, dtype=np.float64).reshape(-1)
    if len(set(np.unique(y).tolist())) < 2:
        raise DegenerateDatasetError("threshold sweep needs both classes present")
    if scores is None:
        if model is None:
            raise ValueError("need a model or precomputed scores")
        scores = model.forward_batch(np.asarray(x_val, dtype=np.float64))
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=np.float64)
    curve = [(float(tau), weighted_f1(scores, y, float(tau))) for tau in grid]
    best_f1 = max(f1 for _, f1 in curve)
    candidates = [tau for tau, f1 in curve if f1 == best_f1]
    best_tau = min(candidates, key=lambda t: (abs(t - 0.5), t))
    return best_tau, best_f1, curve
