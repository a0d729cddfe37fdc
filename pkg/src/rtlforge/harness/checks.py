"""Compile, functional, and equivalence checks with retention rules.

Two engines sit behind one interface:
  - external: drives the configured compiler / simulator / equivalence tools,
    repeating each check `repeat` times and demanding agreement
  - internal: the frontend's strict compile check plus the two-state
    interpreter; exhaustive for small combinational designs, seeded sampling
    otherwise

engine="auto" probes the external tools at startup and degrades to internal
with a warning recorded in the verdict log.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from ..errors import PortMismatchError, ToolTimeoutError, ToolUnavailableError
from ..frontend import (
    Always,
    ContAssign,
    NetDecl,
    Number,
    ParamDecl,
    ProcAssign,
    Select,
    SourceUnit,
    parse,
    walk,
)
from ..transforms import alpha_equivalent
from .config import ToolConfig, probe_tools
from .external import (
    generate_testbench,
    make_workdir,
    parse_mismatches,
    rename_module,
    run_compile,
    run_equivalence,
    run_simulation,
)
from .simulate import (
    DesignModel,
    SimulationUnstable,
    UnsupportedDesign,
    exhaustive_vectors,
    input_bit_count,
    random_vectors,
    run_combinational,
    run_sequential,
    sequential_stimulus,
)


class VerdictStatus(Enum):
    COMPILE_FAIL = "CompileFail"
    COMPILE_OK = "CompileOk"  # compile check passed; not a retention status
    FUNC_MISMATCH = "FuncMismatch"
    EQUIVALENT = "Equivalent"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    tool_log: str
    runs: int


def retain_negative(v: Verdict) -> bool:
    """Keep a mutant only when it consistently fails."""
    return v.status in (VerdictStatus.COMPILE_FAIL, VerdictStatus.FUNC_MISMATCH)


def retain_positive(v: Verdict) -> bool:
    """Keep a transformed variant only when certified equivalent."""
    return v.status is VerdictStatus.EQUIVALENT


# ---- engine selection ----


def resolve_engine(cfg: ToolConfig, need: tuple[str, ...]) -> tuple[str, str]:
    """Pick 'external' or 'internal'; returns (engine, note)."""
    if cfg.engine == "internal":
        return "internal", "engine forced internal"
    avail = probe_tools(cfg)
    missing = [n for n in need if not getattr(avail, n)]
    if cfg.engine == "external":
        if missing:
            raise ToolUnavailableError(f"missing external tools: {', '.join(missing)}")
        return "external", ""
    if missing:
        return "internal", f"degraded to internal engine (missing: {', '.join(missing)})"
    return "external", ""


# ---- strict internal compile check ----


def strict_compile_errors(unit: SourceUnit) -> list[str]:
    """Parser diagnostics plus the legality rules a real compiler enforces:
    continuous assignment targets must be nets, procedural targets must be
    regs, and declarations must be unique."""
    msgs = [str(d) for d in unit.errors]
    if msgs:
        return msgs
    for module in unit.ast.modules:
        kinds: dict[str, str] = {}
        seen: set[str] = set()
        for p in module.ports:
            kinds[p.name] = "reg" if p.is_reg else f"{p.direction}-net"
            if p.name in seen:
                msgs.append(f"duplicate declaration of {p.name!r}")
            seen.add(p.name)
        for item in module.items:
            if isinstance(item, NetDecl):
                for n in item.names:
                    if n in seen:
                        msgs.append(f"duplicate declaration of {n!r}")
                    seen.add(n)
                    kinds[n] = item.kind
            elif isinstance(item, ParamDecl):
                if item.name in seen:
                    msgs.append(f"duplicate declaration of {item.name!r}")
                seen.add(item.name)
                kinds[item.name] = "parameter"

        def base_name(target):
            return target.base.name if isinstance(target, Select) else target.name

        for item in module.items:
            if isinstance(item, ContAssign):
                kind = kinds.get(base_name(item.target), "")
                if kind == "reg":
                    msgs.append(
                        f"continuous assignment to reg {base_name(item.target)!r}"
                    )
            elif isinstance(item, Always):
                for node in walk(item.body):
                    if isinstance(node, ProcAssign):
                        kind = kinds.get(base_name(node.target), "")
                        if kind != "reg":
                            msgs.append(
                                f"procedural assignment to non-reg {base_name(node.target)!r}"
                            )
    return msgs


# ---- ports ----


def port_signature(unit: SourceUnit) -> list[tuple[str, str, int]]:
    sig = []
    for p in unit.ast.modules[0].ports:
        width = 1
        if p.range is not None:
            if isinstance(p.range.msb, Number) and isinstance(p.range.lsb, Number):
                width = abs(p.range.msb.value - p.range.lsb.value) + 1
            else:
                width = -1  # symbolic range; compared structurally
        sig.append((p.name, p.direction, width))
    return sig


def _require_matching_ports(cand: SourceUnit, anchor: SourceUnit):
    if port_signature(cand) != port_signature(anchor):
        raise PortMismatchError("candidate port interface differs from anchor")


# ---- checks ----


def check_compile(candidate: str | Path, cfg: ToolConfig) -> Verdict:
    """CompileFail iff every run fails; Indeterminate when runs disagree."""
    path = Path(candidate)
    source = path.read_text()
    engine, note = resolve_engine(cfg, need=("compile",))
    if engine == "internal":
        msgs = strict_compile_errors(parse(source))
        status = VerdictStatus.COMPILE_FAIL if msgs else VerdictStatus.COMPILE_OK
        log = "; ".join([note] if note else []) or "internal compile check"
        if msgs:
            log += ": " + "; ".join(msgs[:4])
        return Verdict(status, log, 1)
    results = []
    logs = []
    for _ in range(cfg.repeat):
        workdir = make_workdir()
        try:
            rc, log, _ = run_compile([path], cfg, workdir)
        except ToolTimeoutError as exc:
            return Verdict(VerdictStatus.INDETERMINATE, f"timeout: {exc}", len(results) + 1)
        results.append(rc)
        logs.append(log)
    if all(rc != 0 for rc in results):
        return Verdict(VerdictStatus.COMPILE_FAIL, logs[-1], cfg.repeat)
    if all(rc == 0 for rc in results):
        return Verdict(VerdictStatus.COMPILE_OK, logs[-1], cfg.repeat)
    return Verdict(VerdictStatus.INDETERMINATE, "compiler runs disagreed", cfg.repeat)


def _functional_internal(
    cand: SourceUnit, anchor: SourceUnit, cfg: ToolConfig, stim_seed: int, note: str
) -> Verdict:
    try:
        cand_model = DesignModel(cand.ast.modules[0])
        anchor_model = DesignModel(anchor.ast.modules[0])
        if anchor_model.is_sequential:
            stim = sequential_stimulus(anchor_model, cfg.seq_cycles, stim_seed)
            got = run_sequential(cand_model, stim)
            want = run_sequential(anchor_model, stim)
            basis = f"{cfg.seq_cycles} cycles, seed {stim_seed}"
        else:
            stim = random_vectors(anchor_model, cfg.comb_vectors, stim_seed)
            got = run_combinational(cand_model, stim)
            want = run_combinational(anchor_model, stim)
            basis = f"{cfg.comb_vectors} vectors, seed {stim_seed}"
    except (SimulationUnstable, UnsupportedDesign) as exc:
        return Verdict(VerdictStatus.INDETERMINATE, f"{note}; {exc}", 1)
    mismatches = sum(1 for g, w in zip(got, want) if g != w)
    prefix = f"{note}; " if note else ""
    if mismatches:
        return Verdict(
            VerdictStatus.FUNC_MISMATCH,
            f"{prefix}internal simulation: {mismatches} mismatching steps ({basis})",
            1,
        )
    return Verdict(
        VerdictStatus.EQUIVALENT,
        f"{prefix}internal simulation: sampled agreement ({basis})",
        1,
    )


def check_functional(
    candidate: str | Path, anchor: str | Path, cfg: ToolConfig, stim_seed: int = 0
) -> Verdict:
    """Compare candidate behaviour against the anchor on generated stimulus:
    seeded random vectors for combinational designs, clocked cycles with one
    reset pulse for sequential ones."""
    cand_src = Path(candidate).read_text()
    anchor_src = Path(anchor).read_text()
    cand = parse(cand_src)
    anchor_unit = parse(anchor_src)
    if strict_compile_errors(anchor_unit):
        raise ToolUnavailableError("anchor does not pass the compile check")
    if strict_compile_errors(cand):
        return Verdict(VerdictStatus.COMPILE_FAIL, "candidate fails compile check", 1)
    _require_matching_ports(cand, anchor_unit)
    engine, note = resolve_engine(cfg, need=("compile", "sim"))
    if engine == "internal":
        return _functional_internal(cand, anchor_unit, cfg, stim_seed, note)

    anchor_model = DesignModel(anchor_unit.ast.modules[0])
    sequential = anchor_model.is_sequential
    if sequential:
        vectors = sequential_stimulus(anchor_model, cfg.seq_cycles, stim_seed)
    else:
        vectors = random_vectors(anchor_model, cfg.comb_vectors, stim_seed)
    ref_name = anchor_unit.ast.modules[0].name + "__ref"
    tb = generate_testbench(
        anchor_model, cand.ast.modules[0].name, ref_name, vectors, sequential
    )
    counts = []
    log = ""
    for _ in range(cfg.repeat):
        workdir = make_workdir()
        cand_file = workdir / "candidate.v"
        cand_file.write_text(cand_src)
        ref_file = workdir / "reference.v"
        ref_file.write_text(rename_module(anchor_unit, ref_name))
        tb_file = workdir / "tb.v"
        tb_file.write_text(tb)
        try:
            rc, clog, sim = run_compile([tb_file, cand_file, ref_file], cfg, workdir)
            if rc != 0:
                return Verdict(VerdictStatus.INDETERMINATE, f"testbench compile failed: {clog}", 1)
            rc, slog = run_simulation(sim, cfg)
        except ToolTimeoutError as exc:
            return Verdict(VerdictStatus.INDETERMINATE, f"timeout: {exc}", len(counts) + 1)
        n = parse_mismatches(slog)
        if n is None:
            return Verdict(VerdictStatus.INDETERMINATE, f"unparseable simulator output: {slog[-400:]}", 1)
        counts.append(n)
        log = slog
    if all(c > 0 for c in counts):
        return Verdict(VerdictStatus.FUNC_MISMATCH, f"mismatches per run: {counts}", cfg.repeat)
    if all(c == 0 for c in counts):
        return Verdict(
            VerdictStatus.EQUIVALENT,
            f"sampled agreement over {len(vectors)} stimuli ({log.strip().splitlines()[-1] if log else ''})",
            cfg.repeat,
        )
    return Verdict(VerdictStatus.INDETERMINATE, f"runs disagreed: {counts}", cfg.repeat)


def check_equivalent(candidate: str | Path, anchor: str | Path, cfg: ToolConfig) -> Verdict:
    """Certify functional equality of all outputs.

    Order of escalation: alpha-equivalence shortcut, external equivalence
    flow, then the internal fallback (exhaustive for combinational designs
    within the input-bit budget, seeded-sampling agreement for sequential
    ones, Indeterminate otherwise)."""
    cand_src = Path(candidate).read_text()
    anchor_src = Path(anchor).read_text()
    cand = parse(cand_src)
    anchor_unit = parse(anchor_src)
    if strict_compile_errors(cand) or strict_compile_errors(anchor_unit):
        return Verdict(VerdictStatus.COMPILE_FAIL, "equivalence requires compiling designs", 1)
    if alpha_equivalent(cand, anchor_unit):
        return Verdict(VerdictStatus.EQUIVALENT, "alpha-equivalent after canonical renaming", 1)
    engine, note = resolve_engine(cfg, need=("equiv",))
    if engine == "external":
        gold_top = anchor_unit.ast.modules[0].name + "__gold"
        gate_top = cand.ast.modules[0].name + "__gate"
        rcs = []
        log = ""
        for _ in range(cfg.repeat):
            workdir = make_workdir()
            try:
                rc, log = run_equivalence(
                    rename_module(anchor_unit, gold_top),
                    rename_module(cand, gate_top),
                    gold_top,
                    gate_top,
                    cfg,
                    workdir,
                )
            except ToolTimeoutError as exc:
                return Verdict(VerdictStatus.INDETERMINATE, f"timeout: {exc}", len(rcs) + 1)
            rcs.append(rc)
        if all(rc == 0 for rc in rcs):
            return Verdict(VerdictStatus.EQUIVALENT, "equivalence flow certified equality", cfg.repeat)
        if all(rc != 0 for rc in rcs):
            return Verdict(
                VerdictStatus.INDETERMINATE,
                f"equivalence not certified (rc={rcs[-1]}): {log[-400:]}",
                cfg.repeat,
            )
        return Verdict(VerdictStatus.INDETERMINATE, "equivalence runs disagreed", cfg.repeat)

    # internal fallback
    try:
        cand_model = DesignModel(cand.ast.modules[0])
        anchor_model = DesignModel(anchor_unit.ast.modules[0])
        _require_matching_ports(cand, anchor_unit)
        if not anchor_model.is_sequential:
            if input_bit_count(anchor_model) <= cfg.exhaustive_bit_limit:
                vectors = list(exhaustive_vectors(anchor_model))
                got = run_combinational(cand_model, vectors)
                want = run_combinational(anchor_model, vectors)
                if got == want:
                    return Verdict(
                        VerdictStatus.EQUIVALENT,
                        f"{note}; exhaustive agreement over {len(vectors)} vectors".strip("; "),
                        1,
                    )
                return Verdict(
                    VerdictStatus.FUNC_MISMATCH,
                    f"{note}; exhaustive comparison found differing outputs".strip("; "),
                    1,
                )
            return Verdict(
                VerdictStatus.INDETERMINATE,
                f"{note}; design exceeds exhaustive budget "
                f"({input_bit_count(anchor_model)} > {cfg.exhaustive_bit_limit} input bits)".strip("; "),
                1,
            )
        # Sequential: seeded sampling agreement over two independent stimuli.
        for seed in (0xA5A5, 0x5A5A):
            stim = sequential_stimulus(anchor_model, cfg.seq_cycles, seed)
            if run_sequential(cand_model, stim) != run_sequential(anchor_model, stim):
                return Verdict(
                    VerdictStatus.FUNC_MISMATCH,
                    f"{note}; sequential sampling found differing outputs (seed {seed})".strip("; "),
                    2,
                )
        return Verdict(
            VerdictStatus.EQUIVALENT,
            f"{note}; sampled sequential agreement over 2x{cfg.seq_cycles} cycles".strip("; "),
            2,
        )
    except PortMismatchError:
        raise
    except (SimulationUnstable, UnsupportedDesign) as exc:
        return Verdict(VerdictStatus.INDETERMINATE, f"{note}; {exc}".strip("; "), 1)
