"""features.jsonl serialization.

Each line: {"trace_id": ..., "v_stat": [14 reals], "v_sem_ref": {"path":
sidecar relative to the features file, "block": index}, "label": 0|1?}.
Semantic vectors stay by reference; loaders pool the referenced hidden
block on demand.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..emb import HiddenMatrix, max_pool
from ..errors import TraceSchemaError
from .stats import STAT_DIM


def _read_hidden_blocks(path):
    # Imported lazily: the screen package pulls in the classifier, which in
    # turn imports this package.
    from ..screen.trace import read_hidden_blocks

    return read_hidden_blocks(path)


def write_feature_lines(rows: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return path


def read_feature_lines(path: str | Path) -> list[dict]:
    path = Path(path)
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceSchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        for key in ("trace_id", "v_stat", "v_sem_ref"):
            if key not in obj:
                raise TraceSchemaError(f"{path}:{lineno}: missing field {key!r}")
        if len(obj["v_stat"]) != STAT_DIM:
            raise TraceSchemaError(
                f"{path}:{lineno}: v_stat must have {STAT_DIM} entries, got {len(obj['v_stat'])}"
            )
        rows.append(obj)
    return rows


def load_feature_matrix(path: str | Path):
    """Resolve refs and build (X, y, ids); y is None when any label is
    missing. X columns are [pooled v_sem; v_stat]."""
    path = Path(path)
    rows = read_feature_lines(path)
    if not rows:
        raise TraceSchemaError(f"{path}: no feature rows")
    block_cache: dict[Path, list[np.ndarray]] = {}
    xs, ys, ids = [], [], []
    labels_complete = True
    for row in rows:
        ref = row["v_sem_ref"]
        sidecar = (path.parent / ref["path"]).resolve()
        if sidecar not in block_cache:
            block_cache[sidecar], _ = _read_hidden_blocks(sidecar)
        blocks = block_cache[sidecar]
        idx = int(ref["block"])
        if idx >= len(blocks):
            raise TraceSchemaError(f"{path}: block {idx} out of range for {sidecar}")
        v_sem = max_pool(HiddenMatrix(blocks[idx])).values
        xs.append(np.concatenate([v_sem, np.asarray(row["v_stat"], dtype=np.float64)]))
        ids.append(row["trace_id"])
        if "label" in row and row["label"] is not None:
            ys.append(float(row["label"]))
        else:
            labels_complete = False
    x = np.vstack(xs)
    y = np.asarray(ys) if labels_complete and ys else None
    return x, y, ids
