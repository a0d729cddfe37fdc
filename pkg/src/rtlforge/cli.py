"""forge: command-line entry point.

Exit codes: 0 success, 1 usage error, 2 stage/validation failure, 3 external
tool unavailable. The FORGE_TOOLS environment variable points at a tools
TOML file and is overridden by --config.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from .clf import ClassifierModel, TrainConfig, metrics as clf_metrics, sweep_threshold, train
from .dataset import BuildConfig, load_corpus, write_triplets
from .dataset.builder import build as build_dataset
from .errors import ForgeError, StageError, ToolUnavailableError
from .features import classify_token_text, compute_stats, load_feature_matrix, write_feature_lines
from .features.stats import TOKEN_CLASSES, TokenStep
from .frontend import TokenKind, parse
from .harness import (
    check_compile,
    check_equivalent,
    check_functional,
    load_tool_config,
)
from .metrics import aggregate, read_results, success_rate
from .mutate import get_rule, list_rules, mutate, rules_in_family
from .mutate.rules import FAMILIES
from .pipeline import STAGES, PipelineConfig, run_pipeline
from .screen import (
    BridgeClient,
    ClassifierScorer,
    ConstantScorer,
    ReplaySource,
    ScreeningConfig,
    ScriptSpec,
    ScriptedSource,
    generate,
    record_trace,
    replay_trace,
)
from .screen.trace import read_hidden_blocks
from .transforms import TRANSFORMS, transform
from .errors import TransformInapplicableError


def _tools(config_path: str | None):
    path = config_path or os.environ.get("FORGE_TOOLS")
    return load_tool_config(path)


@click.group()
@click.version_option(version=__version__, prog_name="forge")
def cli():
    """Minimal-error Verilog augmentation, validity classification, and
    boundary-gated screening decoding."""


# ---- parse ----


@cli.command("parse")
@click.argument("file", type=click.Path(exists=True, path_type=Path))
@click.option("--dump-tokens", is_flag=True, help="Print the token stream.")
@click.option("--dump-ast", is_flag=True, help="Print the parsed tree.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def parse_cmd(file: Path, dump_tokens: bool, dump_ast: bool, as_json: bool):
    """Parse FILE and report diagnostics; exits 0 iff no errors."""
    unit = parse(file.read_text())
    if as_json:
        click.echo(
            json.dumps(
                {
                    "file": str(file),
                    "errors": [str(d) for d in unit.errors],
                    "diagnostics": [str(d) for d in unit.diagnostics],
                    "modules": [m.name for m in unit.ast.modules],
                },
                indent=2,
            )
        )
    else:
        for d in unit.diagnostics:
            click.echo(str(d))
        if dump_tokens:
            for t in unit.tokens:
                if t.kind is not TokenKind.WHITESPACE:
                    click.echo(repr(t))
        if dump_ast:
            click.echo(unit.ast)
        click.echo(f"{file}: {'ok' if unit.is_valid else 'invalid'} "
                   f"({len(unit.errors)} errors)")
    if not unit.is_valid:
        raise StageError("parse", f"{file} has {len(unit.errors)} error diagnostics")


# ---- mutate ----


def _rules_for(selector: str):
    if selector == "all":
        return list_rules()
    if selector in FAMILIES:
        return rules_in_family(selector)
    try:
        return [get_rule(selector)]
    except KeyError:
        raise click.UsageError(
            f"unknown rule {selector!r}; use a rule id, a family "
            f"({', '.join(FAMILIES)}), or 'all'"
        ) from None


@cli.command("mutate")
@click.argument("anchor", type=click.Path(exists=True, path_type=Path))
@click.option("--rule", "selector", default="all", help="Rule id, family name, or 'all'.")
@click.option("--seed", default=0, type=int)
@click.option("--max", "max_variants", default=10, type=int)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def mutate_cmd(anchor: Path, selector: str, seed: int, max_variants: int, out: Path):
    """Write single-edit mutants of ANCHOR with metadata sidecars."""
    unit = parse(anchor.read_text())
    if unit.errors:
        raise StageError("mutate", f"anchor has error diagnostics: {unit.errors[0]}")
    out.mkdir(parents=True, exist_ok=True)
    total = 0
    for rule in _rules_for(selector):
        for k, (mutant, record) in enumerate(mutate(unit, rule, seed, max_variants)):
            stem = f"{anchor.stem}__{rule.id}__{k}"
            (out / f"{stem}.v").write_text(mutant)
            (out / f"{stem}.json").write_text(
                json.dumps(
                    {
                        "rule_id": record.rule_id,
                        "site": list(record.site),
                        "original_text": record.original_text,
                        "mutated_text": record.mutated_text,
                        "seed": record.seed,
                    },
                    indent=2,
                )
            )
            total += 1
    click.echo(f"wrote {total} mutants to {out}")


# ---- positives ----


@cli.command("positives")
@click.argument("anchor", type=click.Path(exists=True, path_type=Path))
@click.option("--transforms", default="all", help="Comma-separated ids or 'all'.")
@click.option("--seed", default=0, type=int)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def positives_cmd(anchor: Path, transforms: str, seed: int, out: Path):
    """Write semantics-preserving variants of ANCHOR with sidecars."""
    unit = parse(anchor.read_text())
    if unit.errors:
        raise StageError("positives", f"anchor has error diagnostics: {unit.errors[0]}")
    ids = TRANSFORMS if transforms == "all" else tuple(t.strip() for t in transforms.split(","))
    unknown = [t for t in ids if t not in TRANSFORMS]
    if unknown:
        raise click.UsageError(
            f"unknown transforms {unknown}; choose from {', '.join(TRANSFORMS)} or 'all'"
        )
    out.mkdir(parents=True, exist_ok=True)
    total = 0
    for tid in ids:
        try:
            source, record = transform(unit, tid, seed)
        except TransformInapplicableError as exc:
            click.echo(f"{tid}: inapplicable ({exc})")
            continue
        stem = f"{anchor.stem}__{tid}"
        (out / f"{stem}.v").write_text(source)
        (out / f"{stem}.json").write_text(
            json.dumps(
                {"transform_id": record.transform_id, "details": record.details, "seed": record.seed},
                indent=2,
            )
        )
        total += 1
    click.echo(f"wrote {total} positives to {out}")


# ---- validate ----


@cli.command("validate")
@click.argument("candidates", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--anchor", type=click.Path(exists=True, path_type=Path))
@click.option("--mode", type=click.Choice(["compile", "func", "equiv"]), default="compile")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--stim-seed", default=0, type=int)
@click.option("--log-dir", type=click.Path(path_type=Path), default=None)
def validate_cmd(candidates, anchor, mode, config_path, stim_seed, log_dir):
    """Run compile / functional / equivalence checks; JSON line per verdict."""
    cfg = _tools(config_path)
    if mode in ("func", "equiv") and anchor is None:
        raise click.UsageError("--anchor is required for func/equiv modes")
    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)

    def _check(cand):
        if mode == "compile":
            return check_compile(cand, cfg)
        if mode == "func":
            return check_functional(cand, anchor, cfg, stim_seed=stim_seed)
        return check_equivalent(cand, anchor, cfg)

    # verdict computations are independent; run them in parallel up to the
    # configured job limit, emit in input order
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        verdicts = list(pool.map(_check, candidates))
    for cand, verdict in zip(candidates, verdicts):
        log_path = None
        if log_dir is not None:
            log_path = log_dir / f"{Path(cand).stem}__{mode}.log"
            log_path.write_text(verdict.tool_log)
        click.echo(
            json.dumps(
                {
                    "candidate": str(cand),
                    "mode": mode,
                    "status": verdict.status.value,
                    "runs": verdict.runs,
                    "log_path": str(log_path) if log_path else None,
                }
            )
        )


# ---- dataset ----


@cli.group("dataset")
def dataset_group():
    """Triplet dataset commands."""


@dataset_group.command("build")
@click.option("--corpus", "corpus_path", type=click.Path(path_type=Path), default=None)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--seed", default=0, type=int)
@click.option("--positives", default=3, type=int)
@click.option("--negatives-per-family", default=10, type=int)
@click.option("--max-triplets-per-anchor", default=200, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True)
def dataset_build(corpus_path, out, seed, positives, negatives_per_family,
                  max_triplets_per_anchor, config_path, as_json):
    """Assemble the validated triplet dataset."""
    corpus = load_corpus(corpus_path)
    cfg = BuildConfig(
        seed=seed,
        positives=positives,
        negatives_per_family=negatives_per_family,
        max_triplets_per_anchor=max_triplets_per_anchor,
        tools=_tools(config_path),
    )
    samples, report = build_dataset(corpus, cfg)
    write_triplets(samples, out)
    if as_json:
        click.echo(
            json.dumps(
                {
                    "triplets": len(samples),
                    "out": str(out),
                    "per_category": report.per_category,
                    "per_family": report.per_family,
                    "skipped": report.skipped,
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        click.echo(report.summary(len(samples), target=cfg.triplet_target))
        click.echo(f"wrote {out}")


# ---- features ----


@cli.group("features")
def features_group():
    """Uncertainty feature extraction."""


@features_group.command("extract")
@click.option("--trace", "traces", multiple=True, required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--hidden", "hidden_override", type=click.Path(exists=True, path_type=Path),
              default=None, help="Sidecar override when the trace names none.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--label", type=click.Choice(["0", "1"]), default=None,
              help="Label applied to every extracted row.")
def features_extract(traces, hidden_override, out, label):
    """Extract the 14 statistical features per trace; semantic vectors stay
    as references into the hidden-state sidecar."""
    rows = []
    for trace_path in traces:
        trace = replay_trace(trace_path)
        steps = [
            TokenStep(
                text=s.token_text,
                token_class=(
                    s.token_class
                    if s.token_class in TOKEN_CLASSES
                    else classify_token_text(s.token_text)
                ),
                nll=s.nll,
                entropy=s.entropy,
                token_id=s.token_id,
            )
            for s in trace.steps
        ]
        stats = compute_stats(steps)
        sidecar = trace.meta.hidden_sidecar
        if sidecar is None:
            if hidden_override is None:
                raise StageError("features", f"{trace_path} has no hidden sidecar; pass --hidden")
            sidecar_path = Path(hidden_override)
        else:
            sidecar_path = trace_path.parent / sidecar
        refs = [s.hidden_ref for s in trace.steps if s.hidden_ref is not None]
        blocks, _ = read_hidden_blocks(sidecar_path)
        block = refs[-1] if refs else len(blocks) - 1
        row = {
            "trace_id": trace_path.stem.replace(".trace", ""),
            "v_stat": [float(v) for v in stats.as_vector()],
            "v_sem_ref": {
                "path": os.path.relpath(sidecar_path, Path(out).parent),
                "block": block,
            },
        }
        if label is not None:
            row["label"] = int(label)
        rows.append(row)
    write_feature_lines(rows, out)
    click.echo(f"wrote {len(rows)} feature rows to {out}")


# ---- clf ----


@cli.group("clf")
def clf_group():
    """Validity classifier."""


@clf_group.command("train")
@click.option("--features", "features_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--seed", default=0, type=int)
@click.option("--lr", default=1e-4, type=float)
@click.option("--batch-size", default=8, type=int)
@click.option("--epochs", default=100, type=int)
@click.option("--dropout", default=0.1, type=float)
@click.option("--split", default=0.8, type=float)
@click.option("--hidden", default=256, type=int)
@click.option("--optimizer", type=click.Choice(["adam", "momentum"]), default="adam")
@click.option("--json", "as_json", is_flag=True)
def clf_train(features_path, out, seed, lr, batch_size, epochs, dropout, split,
              hidden, optimizer, as_json):
    """Train the classifier head on labelled hybrid features."""
    x, y, _ = load_feature_matrix(features_path)
    if y is None:
        raise StageError("clf", "features file lacks labels")
    cfg = TrainConfig(
        learning_rate=lr, batch_size=batch_size, epochs=epochs, dropout=dropout,
        split=split, seed=seed, hidden=hidden, optimizer=optimizer,
    )
    model, history = train(x, y, cfg)
    model.save(out)
    payload = {
        "model": str(out),
        "input_dim": model.input_dim,
        "val_accuracy": history.val_accuracy[-1],
        "final_train_loss": history.train_loss[-1],
        "final_val_loss": history.val_loss[-1],
    }
    click.echo(json.dumps(payload, indent=2) if as_json
               else f"saved {out} (val accuracy {history.val_accuracy[-1]:.3f})")


@clf_group.command("sweep")
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--features", "features_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--json", "as_json", is_flag=True)
def clf_sweep(model_path, features_path, out, as_json):
    """Sweep the acceptance threshold; writes the weighted-F1 curve CSV."""
    model = ClassifierModel.load(model_path)
    x, y, _ = load_feature_matrix(features_path)
    if y is None:
        raise StageError("clf", "features file lacks labels")
    tau, f1, curve = sweep_threshold(model, x, y)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as fh:
        fh.write("tau,weighted_f1\n")
        for t, f in curve:
            fh.write(f"{t:.3f},{f:.6f}\n")
    summary = clf_metrics(model.forward_batch(x), y, tau)
    payload = {"best_tau": tau, "best_weighted_f1": f1, "curve": str(out), **summary}
    click.echo(json.dumps(payload, indent=2) if as_json
               else f"best weighted F1 {f1:.4f} at tau {tau:.3f} (curve: {out})")


# ---- screen ----


@cli.group("screen")
def screen_group():
    """Gated decoding."""


def _make_source(spec: str):
    if spec.startswith("script:"):
        return ScriptedSource(ScriptSpec.parse(spec[len("script:"):]))
    if spec.startswith("replay:"):
        return ReplaySource(replay_trace(spec[len("replay:"):]))
    if spec.startswith("bridge:"):
        return BridgeClient(spec[len("bridge:"):])
    raise click.UsageError("--source must be script:<spec>, replay:<trace>, or bridge:<target>")


@screen_group.command("run")
@click.option("--source", "source_spec", required=True,
              help="script:<k=v,...> | replay:<trace.jsonl> | bridge:cmd:<command>|tcp:<host>:<port>")
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--tau", default=0.5, type=float)
@click.option("--max-tokens", default=2048, type=int)
@click.option("--temperature", default=0.7, type=float)
@click.option("--top-p", default=0.95, type=float)
@click.option("--seed", default=0, type=int)
@click.option("--prompt", default="", type=str)
@click.option("--stat-scope", type=click.Choice(["segment", "full"]), default="segment")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--trace-out", type=click.Path(path_type=Path), default=None)
@click.option("--json", "as_json", is_flag=True)
def screen_run(source_spec, model_path, tau, max_tokens, temperature, top_p, seed,
               prompt, stat_scope, out, trace_out, as_json):
    """Generate with boundary gating and reject-and-resample-once."""
    source = _make_source(source_spec)
    if model_path is not None:
        scorer = ClassifierScorer(ClassifierModel.load(model_path))
    else:
        scorer = ConstantScorer(1.0)
        click.echo("no classifier given: gating with constant accept", err=True)
    cfg = ScreeningConfig(
        tau=tau, max_tokens=max_tokens, temperature=temperature, top_p=top_p,
        seed=seed, stat_scope=stat_scope,
    )
    verify = source.trace if isinstance(source, ReplaySource) else None
    result = generate(prompt, source, scorer, cfg, verify_boundaries_against=verify)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.text)
    if trace_out is not None:
        record_trace(result.trace, trace_out)
    log = result.session.step_log
    payload = {
        "out": str(out),
        "trace_out": str(trace_out) if trace_out else None,
        "boundaries_gated": result.session.boundaries_gated,
        "accepts": sum(1 for e in log if e.decision == "accept"),
        "rejects": sum(1 for e in log if e.decision == "reject"),
        "forced_accepts": result.session.forced_accepts,
        "incomplete": result.session.incomplete,
        "total_source_tokens": result.session.total_source_tokens,
    }
    click.echo(json.dumps(payload, indent=2) if as_json else
               f"wrote {out}: {payload['boundaries_gated']} gates, "
               f"{payload['rejects']} rejects, {payload['forced_accepts']} forced")
    if isinstance(source, BridgeClient):
        source.close()


# ---- metrics ----


@cli.group("metrics")
def metrics_group():
    """pass@k and success-rate reports."""


@metrics_group.command("passk")
@click.option("--results", "results_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--k", "k_csv", default="1,5,10", help="Comma-separated k values.")
@click.option("--csv", "csv_out", type=click.Path(path_type=Path), default=None)
@click.option("--json", "as_json", is_flag=True)
def metrics_passk(results_path, k_csv, csv_out, as_json):
    """Mean pass@k over problems."""
    results = read_results(results_path)
    k_values = [int(k) for k in k_csv.split(",") if k.strip()]
    report = aggregate(results, k_values)
    if csv_out is not None:
        report.write_csv(csv_out)
    if as_json:
        click.echo(report.to_json())
    else:
        for k in k_values:
            click.echo(f"pass@{k}: {report.mean_pass_at_k[k]:.4f}")


@metrics_group.command("success")
@click.option("--results", "results_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--criterion", type=click.Choice(["compile", "functional"]), required=True)
@click.option("--json", "as_json", is_flag=True)
def metrics_success(results_path, criterion, as_json):
    """Success rate (%) under the chosen criterion."""
    results = read_results(results_path)
    rate = success_rate(results, criterion)
    click.echo(json.dumps({"criterion": criterion, "success_rate": rate}) if as_json
               else f"{criterion} success rate: {rate:.1f}%")


# ---- report ----


@cli.group("report")
def report_group():
    """Analysis reports."""


@report_group.command("pca")
@click.option("--ok", "ok_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--err", "err_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--json", "as_json", is_flag=True)
def report_pca(ok_path, err_path, out, as_json):
    """Two-group PCA scatter and separation score from embedding files.

    Embedding files use the hidden-state block format: a single block is
    treated as a matrix of embeddings; multiple blocks are max-pooled to one
    point each."""
    from .emb import HiddenMatrix, max_pool, separability_report

    def load_points(path: Path):
        blocks, _ = read_hidden_blocks(path)
        if not blocks:
            raise StageError("report", f"{path} holds no hidden blocks")
        if len(blocks) == 1:
            return blocks[0]
        import numpy as np

        return np.vstack([max_pool(HiddenMatrix(b)).values for b in blocks])

    rep = separability_report(load_points(ok_path), load_points(err_path), out)
    payload = {
        "separation_score": rep.score,
        "csv": str(rep.csv_path),
        "plot": str(rep.plot_path) if rep.plot_path else None,
    }
    click.echo(json.dumps(payload, indent=2) if as_json
               else f"separation score {rep.score:.3f} (scatter: {rep.csv_path})")


# ---- rules listing (small helper) ----


@cli.command("rules")
@click.option("--json", "as_json", is_flag=True)
def rules_cmd(as_json):
    """List the mutation rule catalog."""
    rules = list_rules()
    if as_json:
        click.echo(json.dumps([dataclasses.asdict(r) for r in rules], indent=2))
    else:
        for r in rules:
            click.echo(f"{r.id}  {r.family:12s} {'dynamic' if r.dynamic else 'syntax ':8s} {r.description}")


# ---- pipeline ----


@cli.command("pipeline")
@click.option("--stages", default="all", help="Comma-separated stage names or 'all'.")
@click.option("--corpus", "corpus_path", type=click.Path(path_type=Path), default=None)
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("forge-out"))
@click.option("--seed", default=0, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--positives", default=3, type=int)
@click.option("--negatives-per-family", default=10, type=int)
@click.option("--epochs", default=100, type=int)
@click.option("--json", "as_json", is_flag=True)
def pipeline_cmd(stages, corpus_path, out_dir, seed, config_path, positives,
                 negatives_per_family, epochs, as_json):
    """Run the staged pipeline with content-hash staleness skipping."""
    requested = STAGES if stages == "all" else tuple(s.strip() for s in stages.split(","))
    cfg = PipelineConfig(
        out_dir=out_dir,
        corpus_dir=corpus_path,
        seed=seed,
        tools=_tools(config_path),
        positives=positives,
        negatives_per_family=negatives_per_family,
        epochs=epochs,
    )
    results = run_pipeline(cfg, requested)
    if as_json:
        click.echo(
            json.dumps(
                [
                    {"stage": r.name, "status": r.status, "detail": r.detail}
                    for r in results
                ],
                indent=2,
            )
        )
    else:
        for r in results:
            click.echo(f"{r.name:10s} {r.status:12s} {r.detail}")
        click.echo(f"manifest: {Path(out_dir) / 'manifest.json'}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        return 1
    except ToolUnavailableError as exc:
        click.echo(f"external tool unavailable: {exc}", err=True)
        return 3
    except (StageError, ForgeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
