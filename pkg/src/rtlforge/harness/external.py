"""Subprocess clients for the external compiler, simulator, and equivalence
checker, plus the self-checking testbench generator they share."""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from pathlib import Path

from ..errors import ToolTimeoutError
from ..frontend import Module, SourceUnit, TokenKind, meaningful
from .config import ToolConfig
from .simulate import DesignModel

MISMATCH_TAG = "FORGE_MISMATCHES="


def run_command(template: str, substitutions: dict[str, str], timeout: float) -> tuple[int, str]:
    """Run a command template; returns (returncode, combined output)."""
    argv = [tok.format(**substitutions) for tok in shlex.split(template)]
    try:
        proc = subprocess.run(
            argv,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            timeout=timeout,
            text=True,
        )
    except subprocess.TimeoutExpired as exc:
        raise ToolTimeoutError(f"{argv[0]} timed out after {timeout}s") from exc
    except FileNotFoundError as exc:
        return 127, f"{argv[0]}: not found ({exc})"
    return proc.returncode, proc.stdout or ""


def rename_module(unit: SourceUnit, new_name: str) -> str:
    """Rewrite the (first) module's name in the original source text."""
    toks = meaningful(unit.tokens)
    for i, t in enumerate(toks):
        if t.kind is TokenKind.KEYWORD and t.text == "module":
            name_tok = toks[i + 1]
            return unit.source[: name_tok.start] + new_name + unit.source[name_tok.end :]
    raise ValueError("no module header found")


def _decl(width: int, name: str, kind: str) -> str:
    if width > 1:
        return f"  {kind} [{width - 1}:0] {name};"
    return f"  {kind} {name};"


def generate_testbench(
    model: DesignModel,
    dut_name: str,
    ref_name: str,
    vectors: list[dict[str, int]],
    sequential: bool,
) -> str:
    """Self-checking testbench driving both instances with identical stimulus
    and counting output disagreements (x-propagation counts as a mismatch)."""
    m: Module = model.module
    lines = ["`timescale 1ns/1ps", "module __forge_tb;"]
    for name in model.inputs:
        lines.append(_decl(model.signals[name].width, name, "reg"))
    for name in model.outputs:
        lines.append(_decl(model.signals[name].width, f"{name}__dut", "wire"))
        lines.append(_decl(model.signals[name].width, f"{name}__ref", "wire"))
    conn_dut = ", ".join(
        [f".{n}({n})" for n in model.inputs] + [f".{n}({n}__dut)" for n in model.outputs]
    )
    conn_ref = ", ".join(
        [f".{n}({n})" for n in model.inputs] + [f".{n}({n}__ref)" for n in model.outputs]
    )
    lines.append(f"  {dut_name} dut({conn_dut});")
    # "ref" is reserved in SystemVerilog; use a neutral instance name
    lines.append(f"  {ref_name} chk({conn_ref});")
    lines.append("  integer __errors;")
    lines.append("  initial begin")
    lines.append("    __errors = 0;")
    compare = " || ".join(f"({n}__dut !== {n}__ref)" for n in model.outputs)
    clk = model.clock
    for vec in vectors:
        assigns = [f"{k} = {v};" for k, v in vec.items()]
        if sequential:
            # data before the clock fall so negedge logic samples the new
            # cycle's inputs, matching the internal interpreter's phases
            lines.append("    " + " ".join(assigns) + f" {clk} = 0; #1;")
            lines.append(f"    {clk} = 1; #1;")
        else:
            lines.append("    " + " ".join(assigns) + " #1;")
        lines.append(f"    if ({compare}) __errors = __errors + 1;")
    lines.append(f'    $display("{MISMATCH_TAG}%0d", __errors);')
    lines.append("    $finish;")
    lines.append("  end")
    lines.append("endmodule")
    assert m.name  # module is elaborated
    return "\n".join(lines) + "\n"


def run_compile(files: list[Path], cfg: ToolConfig, workdir: Path) -> tuple[int, str, Path]:
    """Compile one or more design files; returns (rc, log, sim binary path).

    {files} may expand to several paths, so it is substituted textually
    before the template is tokenised."""
    out = workdir / "sim.out"
    template = cfg.compile_cmd.replace("{files}", " ".join(str(f) for f in files))
    rc, log = run_command(template, {"out": str(out)}, cfg.timeout)
    return rc, log, out


def run_simulation(sim_binary: Path, cfg: ToolConfig) -> tuple[int, str]:
    return run_command(cfg.sim_cmd, {"sim": str(sim_binary)}, cfg.timeout)


def parse_mismatches(sim_output: str) -> int | None:
    for line in sim_output.splitlines():
        if MISMATCH_TAG in line:
            try:
                return int(line.split(MISMATCH_TAG, 1)[1].strip())
            except ValueError:
                return None
    return None


def run_equivalence(
    gold_source: str,
    gate_source: str,
    gold_top: str,
    gate_top: str,
    cfg: ToolConfig,
    workdir: Path,
) -> tuple[int, str]:
    gold = workdir / "gold.v"
    gate = workdir / "gate.v"
    gold.write_text(gold_source)
    gate.write_text(gate_source)
    script = workdir / "equiv.ys"
    script.write_text(
        cfg.equiv_script.format(
            gold=gold, gate=gate, gold_top=gold_top, gate_top=gate_top
        )
    )
    return run_command(cfg.equiv_cmd, {"script": str(script)}, cfg.timeout)


def make_workdir() -> Path:
    return Path(tempfile.mkdtemp(prefix="forge-validate-"))
