"""Triplet margin loss and its analytic gradients.

loss(a, p, n) = max(0, ||a - p|| - ||a - n|| + m) with Euclidean norms.
Gradients return the subgradient 0 at the hinge kink and at coincident
points (zero distances).
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatchError
from .pooling import Embedding


def _as_vec(x) -> np.ndarray:
    if isinstance(x, Embedding):
        return x.values
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _check(a, p, n, margin):
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if not (a.shape == p.shape == n.shape):
        raise DimensionMismatchError(
            f"embedding dimensions differ: {a.shape}, {p.shape}, {n.shape}"
        )


def triplet_loss(a, p, n, margin: float = 1.0) -> float:
    a, p, n = _as_vec(a), _as_vec(p), _as_vec(n)
    _check(a, p, n, margin)
    d_ap = float(np.linalg.norm(a - p))
    d_an = float(np.linalg.norm(a - n))
    return max(0.0, d_ap - d_an + margin)


def triplet_loss_grad(a, p, n, margin: float = 1.0):
    """Gradients of the loss w.r.t. (a, p, n).

    When the hinge is active: dL/dp = (p - a)/||a - p||, dL/dn = (n - a)/||a - n||
    negated, dL/da = (a - p)/||a - p|| - (a - n)/||a - n||.
    """
    a, p, n = _as_vec(a), _as_vec(p), _as_vec(n)
    _check(a, p, n, margin)
    d_ap = float(np.linalg.norm(a - p))
    d_an = float(np.linalg.norm(a - n))
    zero = np.zeros_like(a)
    if d_ap - d_an + margin <= 0.0:
        return zero.copy(), zero.copy(), zero.copy()
    ga = zero.copy()
    gp = zero.copy()
    gn = zero.copy()
    if d_ap > 0.0:
        ga += (a - p) / d_ap
        gp += (p - a) / d_ap
    if d_an > 0.0:
        ga -= (a - n) / d_an
        gn -= (n - a) / d_an
    return ga, gp, gn
