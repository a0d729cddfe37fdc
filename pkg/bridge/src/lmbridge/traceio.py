"""Writers for the consumer toolkit's trace and hidden-state wire formats.

Trace: line-delimited JSON; first line {"kind": "trace_meta", ...} naming the
hidden sidecar, then one step record per line. The bridge never classifies
tokens lexically, so token_class is null; consumers re-derive it from the
token text. Boundary-flagged steps reference a full-sequence hidden block.

Sidecar: per block, magic "VCLH" | u32 L | u32 D | u32 meta_len | meta JSON |
L*D float32 little-endian row-major.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

HIDDEN_MAGIC = b"VCLH"
SCHEMA_VERSION = 1


def write_hidden_blocks(path: Path, blocks: list[np.ndarray], meta: dict):
    meta_bytes = json.dumps(meta, sort_keys=True).encode()
    with path.open("wb") as fh:
        for block in blocks:
            arr = np.ascontiguousarray(np.asarray(block, dtype="<f4"))
            fh.write(HIDDEN_MAGIC)
            fh.write(struct.pack("<III", arr.shape[0], arr.shape[1], len(meta_bytes)))
            fh.write(meta_bytes)
            fh.write(arr.tobytes())


def write_trace(
    path: Path,
    steps: list[dict],
    hidden_blocks: list[np.ndarray],
    model_id: str,
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    stem = path.name
    for suffix in (".jsonl", ".trace"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    sidecar_name = stem + ".hidden.bin"
    meta = {
        "kind": "trace_meta",
        "schema_version": SCHEMA_VERSION,
        "pooling": "full_sequence",
        "entropy_unit": "nats",
        "stat_scope": "segment",
        "model_id": model_id,
        "hidden_sidecar": sidecar_name if hidden_blocks else None,
    }
    if hidden_blocks:
        write_hidden_blocks(
            path.parent / sidecar_name,
            hidden_blocks,
            {"pooling": "full_sequence", "entropy_unit": "nats", "model_id": model_id},
        )
    with path.open("w") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for step in steps:
            fh.write(json.dumps(step, sort_keys=True) + "\n")
    return path
