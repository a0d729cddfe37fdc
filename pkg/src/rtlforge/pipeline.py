"""Pipeline orchestration with content-hash staleness.

Stages run in dependency order: parse, dataset, features, clf, report,
screen, metrics. Every run writes a manifest recording effective parameters,
seeds, and input/output hashes; re-runs skip stages whose inputs, parameters,
and outputs all hash the same. Stage failures surface with the stage name
and leave other stages' outputs untouched.

Without a model bridge, the features stage synthesizes surrogate traces from
the dataset texts (deterministic, parser-informed; see screen.surrogate) so
the classifier and report stages stay exercisable at desk scale; the screen
stage demos the gated decoder over a scripted source with the trained
classifier.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clf import ClassifierModel, TrainConfig, metrics as clf_metrics, sweep_threshold, train
from .dataset import BuildConfig, bundled_corpus, load_corpus, read_triplets, write_triplets
from .dataset.builder import build as build_dataset
from .errors import StageError, ToolUnavailableError
from .features import compute_stats, load_feature_matrix, write_feature_lines
from .frontend import parse
from .harness import ToolConfig, VerdictStatus, load_tool_config
from .metrics import CandidateVerdict, ProblemResult, aggregate
from .screen import (
    ClassifierScorer,
    ScreeningConfig,
    ScriptSpec,
    ScriptedSource,
    generate,
    record_trace,
)
from .screen.surrogate import synthesize_trace
from .screen.trace import write_hidden_blocks
from .features.stats import TokenStep

STAGES = ("parse", "dataset", "features", "clf", "report", "screen", "metrics")


@dataclass
class PipelineConfig:
    out_dir: Path
    corpus_dir: Path | None = None
    seed: int = 0
    tools: ToolConfig = field(default_factory=ToolConfig)
    stages: tuple[str, ...] = STAGES
    positives: int = 3
    negatives_per_family: int = 10
    max_triplets_per_anchor: int = 200
    hidden_dim: int = 16
    epochs: int = 100
    screen_statements: int = 40
    screen_bad_prob: float = 0.3
    k_values: tuple[int, ...] = (1, 5, 10)

    def params_for(self, stage: str) -> dict:
        common = {"seed": self.seed, "corpus": str(self.corpus_dir or "bundled")}
        per_stage = {
            "parse": {},
            "dataset": {
                "positives": self.positives,
                "negatives_per_family": self.negatives_per_family,
                "max_triplets_per_anchor": self.max_triplets_per_anchor,
                "engine": self.tools.engine,
            },
            "features": {"hidden_dim": self.hidden_dim},
            "clf": {"epochs": self.epochs},
            "report": {},
            "screen": {
                "statements": self.screen_statements,
                "bad_prob": self.screen_bad_prob,
            },
            "metrics": {"k_values": list(self.k_values)},
        }
        return {**common, **per_stage[stage]}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _hash_params(params: dict) -> str:
    return hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()


@dataclass
class StageResult:
    name: str
    status: str  # ran | up-to-date
    inputs: dict[str, str]
    outputs: dict[str, str]
    params_hash: str
    params: dict = field(default_factory=dict)
    detail: str = ""


class Pipeline:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.out / "manifest.json"
        self.previous = {}
        if self.manifest_path.exists():
            try:
                self.previous = json.loads(self.manifest_path.read_text()).get("stages", {})
            except json.JSONDecodeError:
                self.previous = {}
        self.results: list[StageResult] = []

    # paths
    @property
    def triplets_path(self) -> Path:
        return self.out / "triplets.jsonl"

    @property
    def features_path(self) -> Path:
        return self.out / "features.jsonl"

    @property
    def model_path(self) -> Path:
        return self.out / "model.bin"

    def _corpus_files(self) -> list[Path]:
        entries = load_corpus(self.cfg.corpus_dir) if self.cfg.corpus_dir else bundled_corpus()
        return [Path(e.anchor_path) for e in entries]

    def _stage_inputs(self, stage: str) -> list[Path]:
        corpus = self._corpus_files()
        return {
            "parse": corpus,
            "dataset": corpus,
            "features": [self.triplets_path],
            "clf": [self.features_path, self.out / "features_hidden.bin"],
            "report": [self.features_path, self.out / "features_hidden.bin"],
            "screen": [self.model_path],
            "metrics": [self.triplets_path],
        }[stage]

    def _stage_outputs(self, stage: str) -> list[Path]:
        return {
            "parse": [self.out / "parse_report.json"],
            "dataset": [self.triplets_path, self.out / "dataset_report.json"],
            "features": [self.features_path, self.out / "features_hidden.bin"],
            "clf": [self.model_path, self.out / "curve.csv", self.out / "clf_report.json"],
            "report": [self.out / "report" / "scatter.csv", self.out / "pca_report.json"],
            "screen": [self.out / "result.v", self.out / "screen.trace.jsonl", self.out / "screen_report.json"],
            "metrics": [self.out / "metrics.csv", self.out / "metrics.json"],
        }[stage]

    def _up_to_date(self, stage: str, params_hash: str) -> bool:
        prev = self.previous.get(stage)
        if not prev or prev.get("params_hash") != params_hash:
            return False
        for path_str, digest in prev.get("inputs", {}).items():
            path = Path(path_str)
            if not path.exists() or _sha256(path) != digest:
                return False
        for path_str, digest in prev.get("outputs", {}).items():
            path = Path(path_str)
            if not path.exists() or _sha256(path) != digest:
                return False
        return True

    def run(self, requested: tuple[str, ...]) -> list[StageResult]:
        order = [s for s in STAGES if s in requested]
        for stage in order:
            params = self.cfg.params_for(stage)
            params_hash = _hash_params(params)
            inputs = self._stage_inputs(stage)
            missing = [p for p in inputs if not p.exists()]
            if missing:
                raise StageError(stage, f"missing inputs: {', '.join(str(m) for m in missing)}")
            if self._up_to_date(stage, params_hash):
                prev = self.previous[stage]
                self.results.append(
                    StageResult(
                        stage, "up-to-date", prev["inputs"], prev["outputs"],
                        params_hash, params,
                    )
                )
                continue
            try:
                detail = getattr(self, f"_run_{stage}")()
            except ToolUnavailableError as exc:
                raise ToolUnavailableError(f"stage '{stage}' needs external tools: {exc}") from exc
            except StageError:
                raise
            except Exception as exc:
                raise StageError(stage, str(exc)) from exc
            result = StageResult(
                name=stage,
                status="ran",
                inputs={str(p): _sha256(p) for p in inputs},
                outputs={str(p): _sha256(p) for p in self._stage_outputs(stage) if p.exists()},
                params_hash=params_hash,
                params=params,
                detail=detail,
            )
            self.results.append(result)
            self._write_manifest()
        return self.results

    def _write_manifest(self):
        stages = dict(self.previous)
        for r in self.results:
            stages[r.name] = {
                "status": r.status,
                "params": r.params,
                "params_hash": r.params_hash,
                "inputs": r.inputs,
                "outputs": r.outputs,
                "detail": r.detail,
                "time": time.strftime("%Y-%m-%dT%H:%M:%S"),
            }
        manifest = {
            "seed": self.cfg.seed,
            "corpus": str(self.cfg.corpus_dir or "bundled"),
            "engine": self.cfg.tools.engine,
            "stages": stages,
        }
        self.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))

    # ---- stages ----

    def _run_parse(self) -> str:
        report = {}
        bad = 0
        for path in self._corpus_files():
            unit = parse(path.read_text())
            report[path.stem] = {
                "errors": [str(d) for d in unit.errors],
                "warnings": len(unit.diagnostics) - len(unit.errors),
            }
            bad += bool(unit.errors)
        (self.out / "parse_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
        if bad:
            raise StageError("parse", f"{bad} corpus modules fail to parse")
        return f"{len(report)} modules parse cleanly"

    def _run_dataset(self) -> str:
        corpus = load_corpus(self.cfg.corpus_dir)
        cfg = BuildConfig(
            seed=self.cfg.seed,
            positives=self.cfg.positives,
            negatives_per_family=self.cfg.negatives_per_family,
            max_triplets_per_anchor=self.cfg.max_triplets_per_anchor,
            tools=self.cfg.tools,
        )
        samples, report = build_dataset(corpus, cfg)
        if not samples:
            raise StageError("dataset", "no triplets were retained")
        write_triplets(samples, self.triplets_path)
        (self.out / "dataset_report.json").write_text(
            json.dumps(
                {
                    "triplets": len(samples),
                    "per_category": report.per_category,
                    "per_family": report.per_family,
                    "skipped": report.skipped,
                    "candidates_generated": report.candidates_generated,
                },
                indent=2,
                sort_keys=True,
            )
        )
        return f"{len(samples)} triplets"

    def _run_features(self) -> str:
        samples = read_triplets(self.triplets_path)
        texts: dict[str, tuple[str, int]] = {}
        for s in samples:
            texts.setdefault(s.anchor, (f"anchor__{s.id}", 1))
            texts.setdefault(s.positive, (f"pos__{s.id}", 1))
            texts.setdefault(s.negative, (f"neg__{s.id}", 0))
        rows = []
        blocks = []
        sidecar = self.out / "features_hidden.bin"
        for text, (trace_id, label) in texts.items():
            trace = synthesize_trace(text, seed=self.cfg.seed, hidden_dim=self.cfg.hidden_dim)
            steps = [
                TokenStep(
                    text=st.token_text,
                    token_class=st.token_class,
                    nll=st.nll,
                    entropy=st.entropy,
                    token_id=st.token_id,
                )
                for st in trace.steps
            ]
            stats = compute_stats(steps)
            rows.append(
                {
                    "trace_id": trace_id,
                    "v_stat": [float(v) for v in stats.as_vector()],
                    "v_sem_ref": {"path": sidecar.name, "block": len(blocks)},
                    "label": label,
                }
            )
            blocks.append(trace.hidden_blocks[0])
        write_hidden_blocks(sidecar, blocks, {"pooling": "full_sequence", "entropy_unit": "nats"})
        write_feature_lines(rows, self.features_path)
        labels = [r["label"] for r in rows]
        return f"{len(rows)} feature rows ({sum(labels)} valid / {len(labels) - sum(labels)} erroneous), surrogate traces"

    def _run_clf(self) -> str:
        x, y, _ = load_feature_matrix(self.features_path)
        if y is None:
            raise StageError("clf", "features file lacks labels")
        cfg = TrainConfig(seed=self.cfg.seed, epochs=self.cfg.epochs)
        model, history = train(x, y, cfg)
        model.save(self.model_path)
        val_acc = history.val_accuracy[-1]
        # sweep on the validation split
        from .clf.train import split_dataset

        _, val_idx = split_dataset(x, y, cfg.split, cfg.seed)
        tau, f1, curve = sweep_threshold(model, x[val_idx], y[val_idx])
        with (self.out / "curve.csv").open("w") as fh:
            fh.write("tau,weighted_f1\n")
            for t, f in curve:
                fh.write(f"{t:.3f},{f:.6f}\n")
        scores = model.forward_batch(x[val_idx])
        summary = clf_metrics(scores, y[val_idx], 0.5)
        (self.out / "clf_report.json").write_text(
            json.dumps(
                {"val_accuracy": val_acc, "best_tau": tau, "best_weighted_f1": f1, **summary},
                indent=2,
                sort_keys=True,
            )
        )
        return f"val accuracy {val_acc:.3f}, best weighted F1 {f1:.3f} at tau {tau:.3f}"

    def _run_report(self) -> str:
        from .emb import separability_report

        x, y, _ = load_feature_matrix(self.features_path)
        if y is None:
            raise StageError("report", "features file lacks labels")
        ok = x[y == 1.0]
        err = x[y == 0.0]
        rep = separability_report(ok, err, self.out / "report")
        (self.out / "pca_report.json").write_text(
            json.dumps(
                {
                    "separation_score": rep.score,
                    "explained_variance": [float(v) for v in rep.explained_variance],
                    "plot": str(rep.plot_path) if rep.plot_path else None,
                },
                indent=2,
                sort_keys=True,
            )
        )
        return f"separation score {rep.score:.3f}"

    def _run_screen(self) -> str:
        model = ClassifierModel.load(self.model_path)
        spec = ScriptSpec(
            n_statements=self.cfg.screen_statements,
            bad_prob=self.cfg.screen_bad_prob,
            seed=self.cfg.seed,
            hidden_dim=model.input_dim - model.stat_dim,
        )
        cfg = ScreeningConfig(tau=0.5, max_tokens=100000, seed=self.cfg.seed)
        result = generate("demo", ScriptedSource(spec), ClassifierScorer(model), cfg)
        (self.out / "result.v").write_text(result.text)
        record_trace(result.trace, self.out / "screen.trace.jsonl")
        log = result.session.step_log
        (self.out / "screen_report.json").write_text(
            json.dumps(
                {
                    "boundaries_gated": result.session.boundaries_gated,
                    "accepts": sum(1 for e in log if e.decision == "accept"),
                    "rejects": sum(1 for e in log if e.decision == "reject"),
                    "forced_accepts": result.session.forced_accepts,
                    "total_source_tokens": result.session.total_source_tokens,
                    "note": "demo run over a scripted source; scores come from the surrogate-trained classifier",
                },
                indent=2,
                sort_keys=True,
            )
        )
        return f"{result.session.boundaries_gated} gate events"

    def _run_metrics(self) -> str:
        samples = read_triplets(self.triplets_path)
        rng = np.random.default_rng(self.cfg.seed)
        by_anchor: dict[str, list[CandidateVerdict]] = {}
        anchor_names: dict[str, str] = {}
        for s in samples:
            name = s.id.split("__")[0]
            anchor_names.setdefault(s.anchor, name)
            cands = by_anchor.setdefault(s.anchor, [])
            compiled = s.negative_verdict.status is not VerdictStatus.COMPILE_FAIL
            cands.append(CandidateVerdict(compiled=compiled, functional=False))
            cands.append(CandidateVerdict(compiled=True, functional=True))
        problems = []
        for anchor, cands in by_anchor.items():
            # model an n=10 sampling round per problem, mirroring benchmark usage
            idx = rng.permutation(len(cands))[:10]
            chosen = [cands[i] for i in idx]
            if len(chosen) < max(self.cfg.k_values):
                continue
            problems.append(ProblemResult(anchor_names[anchor], chosen))
        if not problems:
            raise StageError("metrics", "no problems with enough candidates")
        report = aggregate(problems, list(self.cfg.k_values))
        report.write_csv(self.out / "metrics.csv")
        (self.out / "metrics.json").write_text(report.to_json())
        return (
            f"{len(problems)} problems, compile rate {report.compile_rate:.1f}%, "
            f"functional rate {report.functional_rate:.1f}%"
        )


def run_pipeline(cfg: PipelineConfig, stages: tuple[str, ...] | None = None) -> list[StageResult]:
    requested = stages or cfg.stages
    unknown = [s for s in requested if s not in STAGES]
    if unknown:
        raise StageError(unknown[0], "unknown stage")
    return Pipeline(cfg).run(tuple(requested))


def load_pipeline_tools(path: str | None) -> ToolConfig:
    return load_tool_config(path)
