"""Trace recording and replay formats.

Trace file: line-delimited JSON. The first line is a metadata record
(schema_version, pooling convention, entropy unit, stat scope, model id,
hidden sidecar filename); each following line is one decoding step:
  {step, token_text, token_id, nll, entropy, token_class, is_boundary,
   attempt, hidden_ref}
hidden_ref indexes a block in the sidecar (null off gate steps).

Hidden-state sidecar: a sequence of binary blocks, each
  magic "VCLH" | u32 L | u32 D | u32 meta_len | meta JSON | L*D float32 LE
row-major. The per-block metadata JSON carries the pooling convention and
entropy unit so a block is interpretable on its own.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import TraceSchemaError

HIDDEN_MAGIC = b"VCLH"
SCHEMA_VERSION = 1

# token_class may be null: producers that do not own lexical classification
# (the model bridge) ship raw text only and consumers re-derive the class.
_STEP_FIELDS = {
    "step": int,
    "token_text": str,
    "token_id": int,
    "nll": (int, float),
    "entropy": (int, float),
    "token_class": (str, type(None)),
    "is_boundary": bool,
    "attempt": int,
}


@dataclass
class TraceStep:
    step: int
    token_text: str
    token_id: int
    nll: float
    entropy: float
    token_class: str | None
    is_boundary: bool
    attempt: int
    hidden_ref: int | None = None


@dataclass
class TraceMeta:
    schema_version: int = SCHEMA_VERSION
    pooling: str = "full_sequence"
    entropy_unit: str = "nats"
    stat_scope: str = "segment"
    model_id: str = ""
    hidden_sidecar: str | None = None


@dataclass
class TokenTrace:
    meta: TraceMeta = field(default_factory=TraceMeta)
    steps: list[TraceStep] = field(default_factory=list)
    hidden_blocks: list[np.ndarray] = field(default_factory=list)


def write_hidden_blocks(path: str | Path, blocks: list[np.ndarray], meta: dict):
    meta_bytes = json.dumps(meta, sort_keys=True).encode()
    with Path(path).open("wb") as fh:
        for block in blocks:
            arr = np.ascontiguousarray(np.asarray(block, dtype="<f4"))
            if arr.ndim != 2:
                raise ValueError("hidden blocks must be 2-D")
            fh.write(HIDDEN_MAGIC)
            fh.write(struct.pack("<III", arr.shape[0], arr.shape[1], len(meta_bytes)))
            fh.write(meta_bytes)
            fh.write(arr.tobytes())


def read_hidden_blocks(path: str | Path) -> tuple[list[np.ndarray], list[dict]]:
    data = Path(path).read_bytes()
    blocks: list[np.ndarray] = []
    metas: list[dict] = []
    off = 0
    while off < len(data):
        if data[off : off + 4] != HIDDEN_MAGIC:
            raise TraceSchemaError(f"{path}: bad hidden block magic at byte {off}")
        off += 4
        rows, cols, meta_len = struct.unpack_from("<III", data, off)
        off += 12
        try:
            metas.append(json.loads(data[off : off + meta_len].decode()))
        except json.JSONDecodeError as exc:
            raise TraceSchemaError(f"{path}: bad block metadata at byte {off}: {exc}") from exc
        off += meta_len
        n = rows * cols
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=off).astype(np.float64)
        off += 4 * n
        blocks.append(arr.reshape(rows, cols))
    return blocks, metas


def sidecar_name(trace_path: str | Path) -> str:
    stem = Path(trace_path).name
    for suffix in (".jsonl", ".trace"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    return stem + ".hidden.bin"


def record_trace(trace: TokenTrace, path: str | Path) -> Path:
    """Write the jsonl trace plus its hidden-state sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = trace.meta
    if trace.hidden_blocks:
        meta.hidden_sidecar = sidecar_name(path)
        write_hidden_blocks(
            path.parent / meta.hidden_sidecar,
            trace.hidden_blocks,
            {"pooling": meta.pooling, "entropy_unit": meta.entropy_unit},
        )
    with path.open("w") as fh:
        header = {"kind": "trace_meta", **asdict(meta)}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for s in trace.steps:
            fh.write(json.dumps(asdict(s), sort_keys=True) + "\n")
    return path


def _check_step(obj: dict, lineno: int, path) -> TraceStep:
    for key, typ in _STEP_FIELDS.items():
        if key not in obj:
            raise TraceSchemaError(f"{path}:{lineno}: missing field {key!r}")
        if not isinstance(obj[key], typ) or (key != "is_boundary" and isinstance(obj[key], bool)):
            raise TraceSchemaError(f"{path}:{lineno}: field {key!r} has wrong type")
    ref = obj.get("hidden_ref")
    if ref is not None and (not isinstance(ref, int) or isinstance(ref, bool)):
        raise TraceSchemaError(f"{path}:{lineno}: hidden_ref must be an integer or null")
    return TraceStep(
        step=obj["step"],
        token_text=obj["token_text"],
        token_id=obj["token_id"],
        nll=float(obj["nll"]),
        entropy=float(obj["entropy"]),
        token_class=obj["token_class"],
        is_boundary=obj["is_boundary"],
        attempt=obj["attempt"],
        hidden_ref=ref,
    )


def replay_trace(path: str | Path) -> TokenTrace:
    """Load a recorded trace; strict schema check with line numbers."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise TraceSchemaError(f"{path}: empty trace file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceSchemaError(f"{path}:1: bad JSON: {exc}") from exc
    if header.get("kind") != "trace_meta":
        raise TraceSchemaError(f"{path}:1: first line must be the trace_meta record")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise TraceSchemaError(
            f"{path}:1: unsupported schema_version {header.get('schema_version')!r}"
        )
    meta = TraceMeta(
        schema_version=header["schema_version"],
        pooling=header.get("pooling", "full_sequence"),
        entropy_unit=header.get("entropy_unit", "nats"),
        stat_scope=header.get("stat_scope", "segment"),
        model_id=header.get("model_id", ""),
        hidden_sidecar=header.get("hidden_sidecar"),
    )
    steps = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceSchemaError(f"{path}:{i}: bad JSON: {exc}") from exc
        steps.append(_check_step(obj, i, path))
    blocks: list[np.ndarray] = []
    needs_hidden = any(s.hidden_ref is not None for s in steps)
    if meta.hidden_sidecar is not None:
        sidecar = path.parent / meta.hidden_sidecar
        if not sidecar.exists():
            if needs_hidden:
                raise TraceSchemaError(f"{path}: missing hidden-state sidecar {sidecar}")
        else:
            blocks, _ = read_hidden_blocks(sidecar)
    elif needs_hidden:
        raise TraceSchemaError(f"{path}: steps reference hidden blocks but no sidecar is named")
    for s in steps:
        if s.hidden_ref is not None and s.hidden_ref >= len(blocks):
            raise TraceSchemaError(f"{path}: hidden_ref {s.hidden_ref} out of range")
    return TokenTrace(meta=meta, steps=steps, hidden_blocks=blocks)
