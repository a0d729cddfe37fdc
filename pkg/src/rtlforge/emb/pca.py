"""Principal component analysis via power iteration with deflation, plus the
two-group separability report.

Components follow a deterministic sign convention (first coordinate of
magnitude above 1e-12 is positive) so repeated runs produce identical
reports. Explained variances use the sample convention (N - 1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_POWER_ITERS = 500
_POWER_TOL = 1e-13


def _power_iteration(mat: np.ndarray, previous: list[np.ndarray]) -> np.ndarray:
    d = mat.shape[0]
    v = np.ones(d) / np.sqrt(d)
    for prev in previous:
        v -= (v @ prev) * prev
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        v = np.zeros(d)
        v[len(previous) % d] = 1.0
    else:
        v /= norm
    for _ in range(_POWER_ITERS):
        w = mat @ v
        for prev in previous:  # re-orthogonalise to keep deflation exact
            w -= (w @ prev) * prev
        norm = np.linalg.norm(w)
        if norm < 1e-15:
            break
        w /= norm
        if np.linalg.norm(w - v) < _POWER_TOL or np.linalg.norm(w + v) < _POWER_TOL:
            v = w
            break
        v = w
    for prev in previous:
        v -= (v @ prev) * prev
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        # Degenerate direction (e.g. zero-variance data): fall back to a
        # canonical basis vector orthogonal to what we already have.
        for i in range(d):
            cand = np.zeros(d)
            cand[i] = 1.0
            for prev in previous:
                cand -= (cand @ prev) * prev
            if np.linalg.norm(cand) > 0.5:
                return cand / np.linalg.norm(cand)
        raise ValueError("cannot construct orthogonal component")
    return v / norm


def _fix_sign(v: np.ndarray) -> np.ndarray:
    for x in v:
        if abs(x) > 1e-12:
            return v if x > 0 else -v
    return v


def pca_project(points, k: int):
    """Project mean-centered points onto the top-k principal components.

    Returns (projections N x k, components k x D, explained_variance k).
    Zero-variance data is not an error: components fall back to canonical
    axes with zero variances.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need an N x D matrix with N >= 2")
    n, d = pts.shape
    if not (1 <= k <= min(n, d)):
        raise ValueError(f"k must satisfy 1 <= k <= min(N, D) = {min(n, d)}")
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = (centered.T @ centered) / (n - 1)
    components: list[np.ndarray] = []
    variances: list[float] = []
    work = cov.copy()
    for _ in range(k):
        v = _power_iteration(work, components)
        lam = float(v @ cov @ v)
        components.append(v)
        variances.append(max(lam, 0.0))
        work = work - lam * np.outer(v, v)
    order = np.argsort(variances)[::-1]
    comp = np.array([_fix_sign(components[i]) for i in order])
    var = np.array([variances[i] for i in order])
    projections = centered @ comp.T
    return projections, comp, var


@dataclass(frozen=True)
class SeparabilityReport:
    score: float
    explained_variance: np.ndarray
    csv_path: Path
    plot_path: Path | None


def silhouette_two_groups(a: np.ndarray, b: np.ndarray) -> float:
    """Mean silhouette over both groups: (between - within) / max(...) per
    point, using mean pairwise Euclidean distances."""
    pts = np.vstack([a, b])
    labels = np.array([0] * len(a) + [1] * len(b))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    scores = []
    for i in range(len(pts)):
        same = labels == labels[i]
        same[i] = False
        other = labels != labels[i]
        if same.sum() == 0 or other.sum() == 0:
            continue
        a_i = dist[i][same].mean()
        b_i = dist[i][other].mean()
        denom = max(a_i, b_i)
        scores.append(0.0 if denom == 0 else (b_i - a_i) / denom)
    return float(np.mean(scores)) if scores else 0.0


def separability_report(ok_points, err_points, out_dir: str | Path) -> SeparabilityReport:
    """2-D PCA scatter of the two groups plus a silhouette separation score.

    Always writes scatter.csv; writes scatter.png too when matplotlib is
    importable.
    """
    ok = np.asarray(ok_points, dtype=np.float64)
    err = np.asarray(err_points, dtype=np.float64)
    if ok.shape[0] < 2 or err.shape[0] < 2:
        raise ValueError("need at least 2 points per group")
    combined = np.vstack([ok, err])
    k = min(2, combined.shape[1], combined.shape[0])
    proj, _, var = pca_project(combined, k)
    if proj.shape[1] == 1:
        proj = np.hstack([proj, np.zeros_like(proj)])
        var = np.append(var, 0.0)
    ok_proj, err_proj = proj[: len(ok)], proj[len(ok) :]
    score = silhouette_two_groups(ok_proj, err_proj)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "scatter.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "pc1", "pc2"])
        for row in ok_proj:
            writer.writerow(["ok", f"{row[0]:.10g}", f"{row[1]:.10g}"])
        for row in err_proj:
            writer.writerow(["err", f"{row[0]:.10g}", f"{row[1]:.10g}"])

    plot_path = None
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 5))
        ax.scatter(ok_proj[:, 0], ok_proj[:, 1], s=12, label="OK", alpha=0.7)
        ax.scatter(err_proj[:, 0], err_proj[:, 1], s=12, label="Error", alpha=0.7)
        ax.set_xlabel("PC1")
        ax.set_ylabel("PC2")
        ax.set_title(f"separation score {score:.3f}")
        ax.legend()
        plot_path = out_dir / "scatter.png"
        fig.savefig(plot_path, dpi=120, bbox_inches="tight")
        plt.close(fig)
    except ImportError:
        pass

    return SeparabilityReport(score, var, csv_path, plot_path)
