"""External tool configuration and probing."""

from __future__ import annotations

import shlex
import shutil
import sys
from dataclasses import dataclass, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_COMPILE_CMD = "iverilog -o {out} {files}"
DEFAULT_SIM_CMD = "vvp {sim}"
DEFAULT_EQUIV_CMD = "yosys -q -s {script}"

DEFAULT_EQUIV_SCRIPT = """\
read_verilog {gold}
read_verilog {gate}
prep
equiv_make {gold_top} {gate_top} equiv
prep -top equiv -flatten
equiv_simple -undef
equiv_induct -undef
equiv_status -assert
"""


@dataclass(frozen=True)
class ToolConfig:
    """Command templates for the external validation tools.

    Templates hold placeholders filled per invocation: {files}, {out} for the
    compiler; {sim} for the simulator; {script}, {gold}, {gate}, {gold_top},
    {gate_top} for the equivalence flow. engine selects the backend: external
    tools, the internal interpreter, or auto (probe, then degrade with a
    warning).
    """

    compile_cmd: str = DEFAULT_COMPILE_CMD
    sim_cmd: str = DEFAULT_SIM_CMD
    equiv_cmd: str = DEFAULT_EQUIV_CMD
    equiv_script: str = DEFAULT_EQUIV_SCRIPT
    timeout: float = 30.0
    repeat: int = 2
    engine: str = "auto"  # auto | external | internal
    jobs: int = 4
    comb_vectors: int = 256
    seq_cycles: int = 512
    exhaustive_bit_limit: int = 16

    def tool_names(self) -> dict[str, str]:
        return {
            "compile": shlex.split(self.compile_cmd)[0],
            "sim": shlex.split(self.sim_cmd)[0],
            "equiv": shlex.split(self.equiv_cmd)[0],
        }


@dataclass(frozen=True)
class ToolAvailability:
    compile: bool
    sim: bool
    equiv: bool

    @property
    def any_missing(self) -> bool:
        return not (self.compile and self.sim and self.equiv)


def probe_tools(cfg: ToolConfig) -> ToolAvailability:
    names = cfg.tool_names()
    return ToolAvailability(
        compile=shutil.which(names["compile"]) is not None,
        sim=shutil.which(names["sim"]) is not None,
        equiv=shutil.which(names["equiv"]) is not None,
    )


def load_tool_config(path: str | Path | None) -> ToolConfig:
    """Read a TOML tools file; missing path yields defaults."""
    if path is None:
        return ToolConfig()
    data = tomllib.loads(Path(path).read_text())
    table = data.get("tools", data)
    known = set(ToolConfig.__dataclass_fields__)
    kwargs = {k: v for k, v in table.items() if k in known}
    return ToolConfig(**kwargs)


def with_engine(cfg: ToolConfig, engine: str) -> ToolConfig:
    return replace(cfg, engine=engine)
