"""Trace export format checks plus the end-to-end handoff: exported traces
must be consumed by the primary toolkit's CLI (features extract, gated
replay) without error."""

import json
import shutil
import struct
import subprocess
import sys
from pathlib import Path

import pytest

FORGE = shutil.which("forge")
needs_forge = pytest.mark.skipif(FORGE is None, reason="primary `forge` CLI not installed")


@pytest.fixture(scope="module")
def exported(tmp_path_factory) -> Path:
    ws = tmp_path_factory.mktemp("export")
    prompts = ws / "prompts.jsonl"
    prompts.write_text(
        json.dumps({"id": "mux", "prompt": "implement a 2-to-1 mux", "max_tokens": 48}) + "\n"
        + json.dumps({"id": "adder", "prompt": "implement a half adder", "max_tokens": 32}) + "\n"
    )
    out = ws / "traces"
    result = subprocess.run(
        [sys.executable, "-m", "lmbridge.cli", "export", "--model", "tiny:seed=5",
         "--prompts", str(prompts), "--out", str(out), "--seed", "3"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert result.returncode == 0, result.stderr
    return out


class TestExportFormat:
    def test_trace_files_written(self, exported):
        assert (exported / "mux.trace.jsonl").exists()
        assert (exported / "adder.trace.jsonl").exists()

    def test_step_counts_and_fields(self, exported):
        lines = (exported / "adder.trace.jsonl").read_text().splitlines()
        header = json.loads(lines[0])
        assert header["kind"] == "trace_meta"
        assert header["entropy_unit"] == "nats"
        assert header["pooling"] == "full_sequence"
        steps = [json.loads(l) for l in lines[1:]]
        assert 0 < len(steps) <= 32
        for s in steps:
            assert s["token_class"] is None  # classification is the consumer's job
            assert s["nll"] >= 0 and s["entropy"] >= 0
            assert isinstance(s["is_boundary"], bool)

    def test_sidecar_blocks_and_refs(self, exported):
        path = exported / "mux.trace.jsonl"
        lines = path.read_text().splitlines()
        header = json.loads(lines[0])
        steps = [json.loads(l) for l in lines[1:]]
        refs = [s["hidden_ref"] for s in steps if s["hidden_ref"] is not None]
        boundary_steps = [s for s in steps if s["is_boundary"]]
        assert len(refs) == len(boundary_steps)
        sidecar = path.parent / header["hidden_sidecar"]
        data = sidecar.read_bytes()
        blocks = 0
        off = 0
        shapes = []
        while off < len(data):
            assert data[off : off + 4] == b"VCLH"
            rows, cols, meta_len = struct.unpack_from("<III", data, off + 4)
            off += 16 + meta_len + 4 * rows * cols
            shapes.append((rows, cols))
            blocks += 1
        assert blocks == len(refs)
        # full-sequence convention: prompt tokens + generated-so-far rows, growing
        assert all(c == 16 for _, c in shapes)
        assert [r for r, _ in shapes] == sorted(r for r, _ in shapes)

    def test_export_deterministic(self, exported, tmp_path):
        prompts = tmp_path / "p.jsonl"
        prompts.write_text(json.dumps({"id": "mux", "prompt": "implement a 2-to-1 mux",
                                       "max_tokens": 48}) + "\n")
        out = tmp_path / "again"
        result = subprocess.run(
            [sys.executable, "-m", "lmbridge.cli", "export", "--model", "tiny:seed=5",
             "--prompts", str(prompts), "--out", str(out), "--seed", "3"],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert result.returncode == 0, result.stderr
        assert (out / "mux.trace.jsonl").read_bytes() == (
            exported / "mux.trace.jsonl"
        ).read_bytes()


@needs_forge
class TestPrimaryConsumesExports:
    def test_features_extract(self, exported, tmp_path):
        out = tmp_path / "features.jsonl"
        result = subprocess.run(
            [FORGE, "features", "extract",
             "--trace", str(exported / "mux.trace.jsonl"),
             "--trace", str(exported / "adder.trace.jsonl"),
             "--label", "1", "--out", str(out)],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert result.returncode == 0, result.stderr
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(rows) == 2
        assert all(len(r["v_stat"]) == 14 for r in rows)

    def test_screen_replay(self, exported, tmp_path):
        # replays the recorded generation through the gated decoder, which
        # also cross-checks recorded boundary flags against its own lexer
        result = subprocess.run(
            [FORGE, "screen", "run",
             "--source", f"replay:{exported / 'mux.trace.jsonl'}",
             "--out", str(tmp_path / "replay.v"),
             "--trace-out", str(tmp_path / "replay.trace.jsonl"), "--json"],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert result.returncode == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["boundaries_gated"] >= 1
        assert (tmp_path / "replay.v").read_text()


@needs_forge
class TestLiveBridgeSource:
    def test_screen_run_over_live_bridge(self, tmp_path):
        cmd = f"{sys.executable} -m lmbridge.cli serve --model tiny:seed=9 --stdio"
        result = subprocess.run(
            [FORGE, "screen", "run",
             "--source", f"bridge:cmd:{cmd}",
             "--max-tokens", "40", "--seed", "4",
             "--prompt", "implement a counter",
             "--out", str(tmp_path / "live.v"),
             "--trace-out", str(tmp_path / "live.trace.jsonl"), "--json"],
            capture_output=True,
            text=True,
            timeout=180,
        )
        assert result.returncode == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["total_source_tokens"] >= 1
        assert (tmp_path / "live.trace.jsonl").exists()
