"""Triplet assembly: validated positives and negatives per anchor.

Per anchor: generate positives (default 3) from the applicable transforms,
up to `negatives_per_family` mutants per error family (spread round-robin
over the family's rules), validate everything through the harness, retain
per the rules (negatives must consistently fail, positives must certify
equivalent), and emit positive x negative pairs capped per anchor. Anchors
that produce nothing are skipped with a report entry, never fabricated.
"""

from __future__ import annotations

import hashlib
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import TransformInapplicableError
from ..frontend import parse
from ..harness import (
    ToolConfig,
    Verdict,
    VerdictStatus,
    check_compile,
    check_equivalent,
    check_functional,
    retain_negative,
    retain_positive,
)
from ..mutate import MutationRecord, mutate, rules_in_family
from ..mutate.rules import FAMILIES
from ..transforms import TRANSFORMS, TransformRecord, transform
from .corpus import CorpusEntry

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BuildConfig:
    seed: int = 0
    positives: int = 3
    negatives_per_family: int = 10
    max_triplets_per_anchor: int = 200
    triplet_target: int = 3000  # reference budget the summary compares against
    tools: ToolConfig = field(default_factory=ToolConfig)


@dataclass
class TripletSample:
    id: str
    category: str
    anchor: str
    positive: str
    negative: str
    positive_meta: TransformRecord
    negative_meta: MutationRecord
    positive_verdict: Verdict
    negative_verdict: Verdict
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if not retain_positive(self.positive_verdict):
            raise ValueError("positive verdict must be Equivalent")
        if not retain_negative(self.negative_verdict):
            raise ValueError("negative verdict must be CompileFail or FuncMismatch")
        if self.anchor == self.positive or self.anchor == self.negative or (
            self.positive == self.negative
        ):
            raise ValueError("anchor, positive, and negative must be distinct texts")


@dataclass
class BuildReport:
    per_category: dict[str, int] = field(default_factory=dict)
    per_family: dict[str, int] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    candidates_generated: int = 0
    negatives_retained: int = 0
    positives_retained: int = 0

    def summary(self, total: int, target: int | None = None) -> str:
        head = f"triplets: {total}"
        if target:
            head += f" (target ~{target}; actual count depends on retention rates)"
        lines = [head]
        lines.append(
            f"candidates: {self.candidates_generated}, negatives retained: "
            f"{self.negatives_retained}, positives retained: {self.positives_retained}"
        )
        lines.append("per category: " + ", ".join(f"{k}={v}" for k, v in sorted(self.per_category.items())))
        lines.append("per family: " + ", ".join(f"{k}={v}" for k, v in sorted(self.per_family.items())))
        for name, reason in self.skipped.items():
            lines.append(f"skipped {name}: {reason}")
        lines.extend(self.warnings)
        return "\n".join(lines)


def _derive_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _gather_positives(entry: CorpusEntry, unit, cfg: BuildConfig, workdir: Path):
    """(source, record, verdict) for retained positives, deduplicated."""
    out = []
    seen = {unit.source}
    anchor_path = workdir / f"{entry.module_name}__anchor.v"
    anchor_path.write_text(unit.source)
    for round_idx in range(cfg.positives):
        for tid in TRANSFORMS:
            if len(out) >= cfg.positives:
                return out
            try:
                pos_src, record = transform(
                    unit, tid, seed=_derive_seed(cfg.seed, entry.module_name, tid, round_idx)
                )
            except TransformInapplicableError:
                continue
            if pos_src in seen:
                continue
            seen.add(pos_src)
            pos_path = workdir / f"{entry.module_name}__{tid}__{round_idx}.v"
            pos_path.write_text(pos_src)
            verdict = check_equivalent(pos_path, anchor_path, cfg.tools)
            if retain_positive(verdict):
                out.append((pos_src, record, verdict))
    return out


def _gather_negatives(entry: CorpusEntry, unit, cfg: BuildConfig, workdir: Path, report):
    """(family, source, record, verdict) for retained negatives."""
    anchor_path = workdir / f"{entry.module_name}__anchor.v"
    retained = []
    for family in FAMILIES:
        per_rule = {}
        for rule in rules_in_family(family):
            seed = _derive_seed(cfg.seed, entry.module_name, rule.id)
            per_rule[rule.id] = mutate(unit, rule, seed, max_variants=cfg.negatives_per_family)
        # round-robin across the family's rules up to the family budget
        candidates = []
        idx = 0
        while len(candidates) < cfg.negatives_per_family:
            added = False
            for rule_id, muts in per_rule.items():
                if idx < len(muts) and len(candidates) < cfg.negatives_per_family:
                    candidates.append(muts[idx])
                    added = True
            if not added:
                break
            idx += 1
        report.candidates_generated += len(candidates)
        for k, (mut_src, record) in enumerate(candidates):
            mut_path = workdir / f"{entry.module_name}__{record.rule_id}__{k}.v"
            mut_path.write_text(mut_src)
            verdict = check_compile(mut_path, cfg.tools)
            if verdict.status is VerdictStatus.COMPILE_OK:
                verdict = check_functional(
                    mut_path,
                    anchor_path,
                    cfg.tools,
                    stim_seed=_derive_seed(cfg.seed, entry.module_name, record.rule_id, k),
                )
            if retain_negative(verdict):
                retained.append((family, mut_src, record, verdict))
    return retained


def build(corpus: list[CorpusEntry], cfg: BuildConfig) -> tuple[list[TripletSample], BuildReport]:
    report = BuildReport()
    samples: list[TripletSample] = []
    with tempfile.TemporaryDirectory(prefix="forge-build-") as tmp:
        workdir = Path(tmp)
        for entry in corpus:
            source = entry.read_source()
            unit = parse(source)
            if unit.errors:
                report.skipped[entry.module_name] = f"anchor invalid: {unit.errors[0]}"
                continue
            positives = _gather_positives(entry, unit, cfg, workdir)
            negatives = _gather_negatives(entry, unit, cfg, workdir, report)
            report.positives_retained += len(positives)
            report.negatives_retained += len(negatives)
            if not positives or not negatives:
                report.skipped[entry.module_name] = (
                    f"insufficient candidates (positives={len(positives)}, "
                    f"negatives={len(negatives)})"
                )
                continue
            # cross product; round-robin pairing once the cap binds
            full = len(positives) * len(negatives)
            pairs = []
            if full <= cfg.max_triplets_per_anchor:
                for ni, neg in enumerate(negatives):
                    for pi, pos in enumerate(positives):
                        pairs.append((pi, pos, ni, neg))
            else:
                for ni, neg in enumerate(negatives):
                    if len(pairs) >= cfg.max_triplets_per_anchor:
                        break
                    pi = ni % len(positives)
                    pairs.append((pi, positives[pi], ni, neg))
            for pi, (pos_src, pos_rec, pos_v), ni, (family, neg_src, neg_rec, neg_v) in pairs:
                sample = TripletSample(
                    id=f"{entry.module_name}__{neg_rec.rule_id}__{ni}__p{pi}",
                    category=entry.category,
                    anchor=source,
                    positive=pos_src,
                    negative=neg_src,
                    positive_meta=pos_rec,
                    negative_meta=neg_rec,
                    positive_verdict=pos_v,
                    negative_verdict=neg_v,
                )
                samples.append(sample)
                report.per_category[entry.category] = report.per_category.get(entry.category, 0) + 1
                report.per_family[family] = report.per_family.get(family, 0) + 1
    return samples, report
