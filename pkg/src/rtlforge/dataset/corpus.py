"""Bundled reference corpus: 15 verified modules across 8 categories."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

CATEGORY_BY_MODULE = {
    "and_gate": "Boolean Functions",
    "or_gate": "Boolean Functions",
    "not_gate": "Boolean Functions",
    "xor_gate": "Boolean Functions",
    "half_adder": "Arithmetic",
    "full_adder": "Arithmetic",
    "comparator": "Arithmetic",
    "mux": "Data Path",
    "decoder": "Codecs",
    "encoder": "Codecs",
    "d_flip_flop": "Storage",
    "counter": "Counters",
    "ram": "Memory",
    "rom": "Memory",
    "traffic_light_controller": "FSMs",
}

CATEGORIES = (
    "Boolean Functions",
    "Arithmetic",
    "Data Path",
    "Codecs",
    "Storage",
    "Counters",
    "Memory",
    "FSMs",
)

MODULE_NAMES = tuple(CATEGORY_BY_MODULE)


@dataclass(frozen=True)
class CorpusEntry:
    category: str
    module_name: str
    anchor_path: Path

    def read_source(self) -> str:
        return Path(self.anchor_path).read_text()


def corpus_dir() -> Path:
    return Path(resources.files("rtlforge.dataset") / "corpus_files")


def bundled_corpus() -> list[CorpusEntry]:
    base = corpus_dir()
    entries = []
    for name in MODULE_NAMES:
        path = base / f"{name}.v"
        if not path.exists():
            raise FileNotFoundError(f"bundled corpus is missing {path}")
        entries.append(CorpusEntry(CATEGORY_BY_MODULE[name], name, path))
    return entries


def load_corpus(directory: str | Path | None) -> list[CorpusEntry]:
    """Corpus from a directory of <module>.v files, or the bundled one."""
    if directory is None:
        return bundled_corpus()
    base = Path(directory)
    entries = []
    for path in sorted(base.glob("*.v")):
        name = path.stem
        category = CATEGORY_BY_MODULE.get(name, "Uncategorized")
        entries.append(CorpusEntry(category, name, path))
    if not entries:
        raise FileNotFoundError(f"no .v files under {base}")
    return entries
