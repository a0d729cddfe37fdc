import numpy as np
import pytest

from rtlforge.clf import ClassifierModel
from rtlforge.errors import DimensionMismatchError, TraceSchemaError
from rtlforge.features import STAT_DIM
from rtlforge.frontend import text_ends_at_boundary
from rtlforge.screen import (
    ClassifierScorer,
    ConstantScorer,
    OracleScorer,
    ReplaySource,
    ScreeningConfig,
    ScriptSpec,
    ScriptedSource,
    decode_plain,
    generate,
    record_trace,
    replay_trace,
)


def bad_oracle(ctx):
    return 0.0 if "bad_" in ctx.segment_text else 1.0


class TestScriptedSource:
    def test_deterministic_stream(self):
        spec = ScriptSpec(n_statements=5, bad_prob=0.5, seed=3)
        a, _ = decode_plain("p", ScriptedSource(spec), ScreeningConfig(max_tokens=999))
        b, _ = decode_plain("p", ScriptedSource(spec), ScreeningConfig(max_tokens=999))
        assert a == b

    def test_spec_parse(self):
        spec = ScriptSpec.parse("n_statements=7,bad_prob=0.25,seed=9")
        assert spec.n_statements == 7 and spec.bad_prob == 0.25 and spec.seed == 9
        with pytest.raises(ValueError):
            ScriptSpec.parse("nope=1")

    def test_statements_end_at_boundaries(self):
        text, _ = decode_plain("p", ScriptedSource(ScriptSpec(n_statements=3)), ScreeningConfig())
        assert text_ends_at_boundary(text)
        assert text.count(";") == 3


class TestGating:
    def test_constant_accept_equals_unscreened(self):
        for seed in range(20):
            spec = ScriptSpec(n_statements=8, bad_prob=0.5, seed=seed)
            cfg = ScreeningConfig(seed=seed, max_tokens=4096)
            gated = generate("p", ScriptedSource(spec), ConstantScorer(1.0), cfg)
            plain, _ = decode_plain("p", ScriptedSource(spec), cfg)
            assert gated.text == plain

    def test_tau_zero_equals_unscreened(self):
        spec = ScriptSpec(n_statements=8, bad_prob=0.5, seed=1)
        model = ClassifierModel.init(input_dim=spec.hidden_dim + STAT_DIM, hidden=8, rng_seed=0)
        cfg = ScreeningConfig(tau=0.0, seed=1, max_tokens=4096)
        gated = generate("p", ScriptedSource(spec), ClassifierScorer(model), cfg)
        plain, _ = decode_plain("p", ScriptedSource(spec), cfg)
        assert gated.text == plain

    def test_constant_reject_double_tokens_and_termination(self):
        spec = ScriptSpec(n_statements=6, bad_prob=0.0, seed=2)
        cfg = ScreeningConfig(seed=2, max_tokens=4096)
        res = generate("p", ScriptedSource(spec), ConstantScorer(0.0), cfg)
        plain, base_tokens = decode_plain("p", ScriptedSource(spec), cfg)
        assert res.session.total_source_tokens == 2 * base_tokens
        forced = [e for e in res.session.step_log if e.decision == "force_accept"]
        assert len(forced) == 6 and all(e.attempt == 2 for e in forced)
        assert res.session.forced_accepts == 6

    def test_oracle_screening_rate(self):
        spec = ScriptSpec(n_statements=2000, bad_prob=0.3, seed=11)
        cfg = ScreeningConfig(seed=11, max_tokens=10**6)
        res = generate("p", ScriptedSource(spec), OracleScorer(bad_oracle), cfg)
        rate = res.text.count("bad_") / 2000
        assert abs(rate - 0.09) <= 0.03
        # at most two attempts at any boundary
        from collections import Counter
        per_boundary = Counter(e.boundary_index for e in res.session.step_log)
        assert max(per_boundary.values()) <= 2

    def test_gate_events_only_at_boundaries(self):
        spec = ScriptSpec(n_statements=10, bad_prob=0.4, seed=4)
        res = generate("p", ScriptedSource(spec), OracleScorer(bad_oracle), ScreeningConfig(seed=4))
        gate_steps = [s for s in res.trace.steps if s.hidden_ref is not None]
        assert all(s.is_boundary for s in gate_steps)
        assert len(gate_steps) == res.session.boundaries_gated

    def test_budget_exhaustion_flagged(self):
        spec = ScriptSpec(n_statements=100, bad_prob=0.0, seed=0)
        res = generate("p", ScriptedSource(spec), ConstantScorer(1.0), ScreeningConfig(max_tokens=12))
        assert res.session.incomplete
        assert res.session.total_source_tokens == 12

    def test_dimension_check(self):
        spec = ScriptSpec(n_statements=2, hidden_dim=4)
        model = ClassifierModel.init(input_dim=99, hidden=4, rng_seed=0)
        with pytest.raises(DimensionMismatchError):
            generate("p", ScriptedSource(spec), ClassifierScorer(model), ScreeningConfig())

    def test_stat_scope_full_differs_from_segment(self):
        spec = ScriptSpec(n_statements=6, bad_prob=0.0, seed=5)
        captured = {}

        def capture(ctx):
            captured.setdefault(ctx.boundary_index, len(ctx.segment_steps))
            return 1.0

        res_seg = generate("p", ScriptedSource(spec), OracleScorer(capture),
                           ScreeningConfig(seed=5, stat_scope="segment"))
        assert all(n == 5 for n in captured.values())
        res_full = generate("p", ScriptedSource(spec), OracleScorer(lambda c: 1.0),
                            ScreeningConfig(seed=5, stat_scope="full"))
        assert res_full.text == res_seg.text


class TestTraceRoundTrip:
    def make_trace(self, tmp_path, bad_prob=0.5, n=12, seed=6):
        spec = ScriptSpec(n_statements=n, bad_prob=bad_prob, seed=seed)
        cfg = ScreeningConfig(seed=seed, max_tokens=4096)
        res = generate("p", ScriptedSource(spec), OracleScorer(bad_oracle), cfg)
        path = tmp_path / "run.trace.jsonl"
        record_trace(res.trace, path)
        return res, path, cfg

    def test_record_replay_identical_decisions(self, tmp_path):
        res, path, cfg = self.make_trace(tmp_path)
        trace = replay_trace(path)
        rep = generate("p", ReplaySource(trace), OracleScorer(bad_oracle), cfg,
                       verify_boundaries_against=trace)
        assert rep.session.step_log == res.session.step_log
        assert rep.text == res.text

    def test_replay_tau_floor_accepts_everything(self, tmp_path):
        _, path, _ = self.make_trace(tmp_path)
        trace = replay_trace(path)
        rep = generate("p", ReplaySource(trace), ConstantScorer(0.5),
                       ScreeningConfig(tau=0.0, max_tokens=4096))
        assert all(e.decision == "accept" and e.attempt == 1 for e in rep.session.step_log)

    def test_replay_nested_acceptances_in_tau(self, tmp_path):
        spec = ScriptSpec(n_statements=30, bad_prob=0.0, seed=8)
        cfg = ScreeningConfig(seed=8, max_tokens=10**5)
        res = generate("p", ScriptedSource(spec), OracleScorer(lambda c: 1.0), cfg)
        path = tmp_path / "t.trace.jsonl"
        record_trace(res.trace, path)
        trace = replay_trace(path)

        def score_by_hash(ctx):
            return (hash(ctx.segment_text) % 1000) / 1000.0

        accepted = {}
        for tau in (0.2, 0.6):
            rep = generate("p", ReplaySource(trace), OracleScorer(score_by_hash),
                           ScreeningConfig(tau=tau, max_tokens=10**5))
            accepted[tau] = {
                e.boundary_index for e in rep.session.step_log
                if e.decision == "accept" and e.attempt == 1
            }
        assert accepted[0.6] <= accepted[0.2]

    def test_schema_violations_reported_with_line(self, tmp_path):
        _, path, _ = self.make_trace(tmp_path)
        lines = path.read_text().splitlines()
        import json

        broken = json.loads(lines[3])
        del broken["nll"]
        lines[3] = json.dumps(broken)
        bad = tmp_path / "bad.trace.jsonl"
        bad.write_text("\n".join(lines) + "\n")
        with pytest.raises(TraceSchemaError, match=":4"):
            replay_trace(bad)

    def test_missing_sidecar_detected(self, tmp_path):
        _, path, _ = self.make_trace(tmp_path)
        sidecar = path.parent / replay_trace(path).meta.hidden_sidecar
        sidecar.unlink()
        with pytest.raises(TraceSchemaError, match="sidecar"):
            replay_trace(path)

    def test_boundary_flag_verification_catches_lies(self, tmp_path):
        _, path, _ = self.make_trace(tmp_path, bad_prob=0.0, n=4)
        import json

        lines = path.read_text().splitlines()
        # flip a recorded non-boundary step's flag
        for i, line in enumerate(lines[1:], start=1):
            obj = json.loads(line)
            if not obj["is_boundary"]:
                obj["is_boundary"] = True
                lines[i] = json.dumps(obj)
                break
        forged = tmp_path / "forged.trace.jsonl"
        forged.write_text("\n".join(lines) + "\n")
        import shutil

        shutil.copy(path.parent / replay_trace(path).meta.hidden_sidecar,
                    tmp_path / forged.name.replace(".trace.jsonl", ".hidden.bin"))
        trace = replay_trace(forged)
        with pytest.raises(TraceSchemaError, match="disagrees"):
            generate("p", ReplaySource(trace), ConstantScorer(1.0),
                     ScreeningConfig(max_tokens=4096), verify_boundaries_against=trace)

    def test_hidden_block_shapes(self, tmp_path):
        res, path, _ = self.make_trace(tmp_path)
        trace = replay_trace(path)
        for block in trace.hidden_blocks:
            assert block.ndim == 2 and block.shape[1] == 4


class TestReplayWithoutAlternates:
    def test_rejecting_replay_force_accepts_same_segments(self, tmp_path):
        # record an all-accept run, then replay with a constant-reject scorer:
        # the source re-serves each segment, the decoder force-accepts it
        spec = ScriptSpec(n_statements=5, bad_prob=0.0, seed=3)
        cfg = ScreeningConfig(seed=3, max_tokens=4096)
        res = generate("p", ScriptedSource(spec), ConstantScorer(1.0), cfg)
        path = tmp_path / "ok.trace.jsonl"
        record_trace(res.trace, path)
        trace = replay_trace(path)
        rep = generate("p", ReplaySource(trace), ConstantScorer(0.0), cfg)
        assert rep.text == res.text
        assert rep.session.forced_accepts == 5
        assert all(e.attempt == 2 for e in rep.session.step_log if e.decision == "force_accept")


def test_session_exposes_accepted_prefix_and_checkpoint():
    spec = ScriptSpec(n_statements=4, bad_prob=0.0, seed=1)
    res = generate("p", ScriptedSource(spec), ConstantScorer(1.0),
                   ScreeningConfig(seed=1, max_tokens=4096))
    assert res.session.last_checkpoint is not None
    assert "".join(s.text for s in res.session.accepted_steps) == res.session.accepted_text
    assert res.session.accepted_text == res.text
