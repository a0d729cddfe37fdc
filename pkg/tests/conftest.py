from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from rtlforge.dataset import bundled_corpus
from rtlforge.frontend import parse
from rtlforge.harness import ToolConfig


def _tool_present(name: str) -> bool:
    return shutil.which(name) is not None


HAVE_COMPILER = _tool_present("iverilog")
HAVE_SIM = _tool_present("vvp")
HAVE_EQUIV = _tool_present("yosys")

needs_compiler = pytest.mark.skipif(
    not (HAVE_COMPILER and HAVE_SIM), reason="external compiler/simulator (iverilog/vvp) not installed"
)
needs_equiv = pytest.mark.skipif(not HAVE_EQUIV, reason="equivalence checker (yosys) not installed")


@pytest.fixture(scope="session")
def corpus_entries():
    return bundled_corpus()


@pytest.fixture(scope="session")
def corpus_units(corpus_entries):
    return {e.module_name: parse(e.read_source()) for e in corpus_entries}


@pytest.fixture(scope="session")
def corpus_paths(corpus_entries):
    return {e.module_name: Path(e.anchor_path) for e in corpus_entries}


@pytest.fixture()
def internal_tools():
    return ToolConfig(engine="internal")


@pytest.fixture()
def auto_tools():
    return ToolConfig(engine="auto")
