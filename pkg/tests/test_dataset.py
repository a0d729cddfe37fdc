import json

import pytest

from rtlforge.dataset import (
    CATEGORIES,
    CATEGORY_BY_MODULE,
    MODULE_NAMES,
    BuildConfig,
    bundled_corpus,
    build,
    load_corpus,
    read_triplets,
    write_triplets,
)
from rtlforge.errors import DatasetSchemaError
from rtlforge.frontend import parse
from rtlforge.harness import (
    ToolConfig,
    VerdictStatus,
    check_compile,
    check_equivalent,
    check_functional,
    retain_negative,
    retain_positive,
)


@pytest.fixture(scope="module")
def built():
    cfg = BuildConfig(seed=11, negatives_per_family=4, tools=ToolConfig(engine="internal"))
    corpus = bundled_corpus()
    return build(corpus, cfg), cfg


class TestCorpus:
    def test_all_15_modules_present(self, corpus_entries):
        assert len(corpus_entries) == 15
        assert {e.module_name for e in corpus_entries} == set(MODULE_NAMES)

    def test_eight_categories(self):
        assert len(CATEGORIES) == 8
        assert set(CATEGORY_BY_MODULE.values()) == set(CATEGORIES)

    def test_every_anchor_compiles_cleanly(self, corpus_entries):
        for e in corpus_entries:
            assert parse(e.read_source()).is_valid, e.module_name

    def test_load_corpus_from_directory(self, tmp_path):
        (tmp_path / "and_gate.v").write_text(
            "module and_gate(input a, input b, output y);\n  assign y = a & b;\nendmodule\n"
        )
        entries = load_corpus(tmp_path)
        assert entries[0].category == "Boolean Functions"
        with pytest.raises(FileNotFoundError):
            load_corpus(tmp_path / "empty")


class TestBuild:
    def test_candidate_budget(self, built):
        (_, report), cfg = built
        assert report.candidates_generated <= 15 * 5 * cfg.negatives_per_family

    def test_every_category_contributes(self, built):
        (samples, report), _ = built
        assert samples
        contributing = set(report.per_category)
        assert contributing == set(CATEGORIES), report.skipped

    def test_triplet_invariants(self, built):
        (samples, _), _ = built
        for s in samples:
            assert retain_positive(s.positive_verdict)
            assert retain_negative(s.negative_verdict)
            assert s.anchor != s.positive != s.negative
            assert s.category in CATEGORIES

    def test_deterministic_under_seed(self):
        corpus = [e for e in bundled_corpus() if e.module_name in ("half_adder", "mux")]
        cfg = BuildConfig(seed=3, negatives_per_family=3, tools=ToolConfig(engine="internal"))
        a, _ = build(corpus, cfg)
        b, _ = build(corpus, cfg)
        assert [s.id for s in a] == [s.id for s in b]
        assert [s.negative for s in a] == [s.negative for s in b]

    def test_retained_triplets_revalidate(self, built, tmp_path):
        (samples, _), cfg = built
        spot = samples[:: max(1, len(samples) // 12)]
        for s in spot:
            anchor = tmp_path / "a.v"
            anchor.write_text(s.anchor)
            neg = tmp_path / "n.v"
            neg.write_text(s.negative)
            pos = tmp_path / "p.v"
            pos.write_text(s.positive)
            v = check_compile(neg, cfg.tools)
            if v.status is VerdictStatus.COMPILE_OK:
                v = check_functional(neg, anchor, cfg.tools, stim_seed=0)
            assert retain_negative(v), s.id
            assert retain_positive(check_equivalent(pos, anchor, cfg.tools)), s.id

    def test_mutant_sources_are_single_edits(self, built):
        (samples, _), _ = built
        for s in samples:
            rec = s.negative_meta
            lo, hi = rec.site
            assert s.anchor[lo:hi] == rec.original_text
            assert s.negative == s.anchor[:lo] + rec.mutated_text + s.anchor[hi:]


class TestSerialization:
    def test_roundtrip_field_for_field(self, built, tmp_path):
        (samples, _), _ = built
        path = tmp_path / "triplets.jsonl"
        write_triplets(samples[:10], path)
        loaded = read_triplets(path)
        assert loaded == samples[:10]
        again = tmp_path / "again.jsonl"
        write_triplets(loaded, again)
        assert path.read_bytes() == again.read_bytes()

    def test_missing_field_names_line(self, built, tmp_path):
        (samples, _), _ = built
        path = tmp_path / "broken.jsonl"
        write_triplets(samples[:3], path)
        lines = path.read_text().splitlines()
        obj = json.loads(lines[1])
        del obj["negative"]
        lines[1] = json.dumps(obj)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetSchemaError, match=":2"):
            read_triplets(path)

    def test_empty_file_is_empty_dataset(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert read_triplets(path) == []

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "junk.jsonl"
        path.write_text("{not json}\n")
        with pytest.raises(DatasetSchemaError, match=":1"):
            read_triplets(path)


class TestInsufficientCandidates:
    def test_anchor_without_positives_is_skipped_with_log(self, tmp_path):
        # a passthrough buffer admits no semantics-preserving transform
        (tmp_path / "odd_buffer.v").write_text(
            "module odd_buffer(input a, output y);\n  assign y = a;\nendmodule\n"
        )
        entries = load_corpus(tmp_path)
        samples, report = build(
            entries, BuildConfig(seed=1, tools=ToolConfig(engine="internal"))
        )
        assert samples == []
        assert "insufficient candidates" in report.skipped["odd_buffer"]
