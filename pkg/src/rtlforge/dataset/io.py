"""Line-delimited JSON serialization for triplet datasets.

One TripletSample per line with a fixed field order, so re-serializing a
loaded dataset is byte-identical. Schema violations raise with the offending
line number.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import DatasetSchemaError
from ..harness import Verdict, VerdictStatus
from ..mutate import MutationRecord
from ..transforms import TransformRecord
from .builder import SCHEMA_VERSION, TripletSample

_REQUIRED = (
    "schema_version",
    "id",
    "category",
    "anchor",
    "positive",
    "negative",
    "positive_meta",
    "negative_meta",
    "verdicts",
)


def _sample_to_obj(s: TripletSample) -> dict:
    return {
        "schema_version": s.schema_version,
        "id": s.id,
        "category": s.category,
        "anchor": s.anchor,
        "positive": s.positive,
        "negative": s.negative,
        "positive_meta": {
            "transform_id": s.positive_meta.transform_id,
            "details": s.positive_meta.details,
            "seed": s.positive_meta.seed,
        },
        "negative_meta": {
            "rule_id": s.negative_meta.rule_id,
            "site": list(s.negative_meta.site),
            "original_text": s.negative_meta.original_text,
            "mutated_text": s.negative_meta.mutated_text,
            "seed": s.negative_meta.seed,
        },
        "verdicts": {
            "positive": {
                "status": s.positive_verdict.status.value,
                "runs": s.positive_verdict.runs,
                "tool_log": s.positive_verdict.tool_log,
            },
            "negative": {
                "status": s.negative_verdict.status.value,
                "runs": s.negative_verdict.runs,
                "tool_log": s.negative_verdict.tool_log,
            },
        },
    }


def _verdict_from_obj(obj: dict, where: str) -> Verdict:
    try:
        status = VerdictStatus(obj["status"])
        return Verdict(status=status, tool_log=obj["tool_log"], runs=obj["runs"])
    except (KeyError, ValueError) as exc:
        raise DatasetSchemaError(f"{where}: bad verdict object: {exc}") from exc


def _sample_from_obj(obj: dict, where: str) -> TripletSample:
    for key in _REQUIRED:
        if key not in obj:
            raise DatasetSchemaError(f"{where}: missing field {key!r}")
    if obj["schema_version"] != SCHEMA_VERSION:
        raise DatasetSchemaError(f"{where}: unsupported schema_version {obj['schema_version']!r}")
    pm, nm, vd = obj["positive_meta"], obj["negative_meta"], obj["verdicts"]
    try:
        positive_meta = TransformRecord(pm["transform_id"], pm["details"], pm["seed"])
        negative_meta = MutationRecord(
            rule_id=nm["rule_id"],
            site=tuple(nm["site"]),
            original_text=nm["original_text"],
            mutated_text=nm["mutated_text"],
            seed=nm["seed"],
        )
    except (KeyError, TypeError) as exc:
        raise DatasetSchemaError(f"{where}: bad metadata object: {exc}") from exc
    try:
        return TripletSample(
            id=obj["id"],
            category=obj["category"],
            anchor=obj["anchor"],
            positive=obj["positive"],
            negative=obj["negative"],
            positive_meta=positive_meta,
            negative_meta=negative_meta,
            positive_verdict=_verdict_from_obj(vd.get("positive", {}), where),
            negative_verdict=_verdict_from_obj(vd.get("negative", {}), where),
            schema_version=obj["schema_version"],
        )
    except ValueError as exc:
        raise DatasetSchemaError(f"{where}: {exc}") from exc


def write_triplets(samples: list[TripletSample], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for s in samples:
            fh.write(json.dumps(_sample_to_obj(s), separators=(",", ":")) + "\n")
    return path


def read_triplets(path: str | Path) -> list[TripletSample]:
    path = Path(path)
    samples = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetSchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        samples.append(_sample_from_obj(obj, f"{path}:{lineno}"))
    return samples
