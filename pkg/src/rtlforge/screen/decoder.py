"""Boundary-gated autoregressive decoding with reject-and-resample-once.

The loop: decode a step; when the decoded text reaches a statement boundary,
pool the source's hidden states, compute the statistical features of the
current segment, score the hybrid vector, and gate. A score below tau rejects
the local continuation and resamples once from the last accepted boundary
with a fresh attempt seed; a second failure force-accepts (logged), which
guarantees termination. Per-step work stays proportional to the segment
because boundary detection lexes only a carried tail plus the segment text.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..clf import ClassifierModel
from ..errors import DimensionMismatchError
from ..features import FeatureParams, HybridFeature, STAT_DIM, TokenStep, classify_token_text, compute_hybrid
from ..frontend import TokenKind, lex
from .source import SamplingParams, SourceToken, TokenSource
from .trace import TokenTrace, TraceMeta, TraceStep


@dataclass(frozen=True)
class ScreeningConfig:
    tau: float = 0.5
    max_resamples_per_boundary: int = 1
    max_tokens: int = 2048
    temperature: float = 0.7
    top_p: float = 0.95
    seed: int = 0
    stat_scope: str = "segment"  # segment | full
    feature_params: FeatureParams = field(default_factory=FeatureParams)

    def __post_init__(self):
        if not (0.0 <= self.tau <= 1.0):
            raise ValueError("tau must be in [0, 1]")
        if self.stat_scope not in ("segment", "full"):
            raise ValueError("stat_scope must be 'segment' or 'full'")

    def sampling(self) -> SamplingParams:
        return SamplingParams(self.temperature, self.top_p, self.seed)


@dataclass(frozen=True)
class GateEvent:
    boundary_index: int
    score: float
    decision: str  # accept | reject | force_accept
    attempt: int


@dataclass
class ScreeningSession:
    accepted_text: str = ""
    accepted_steps: list[TokenStep] = field(default_factory=list)  # accepted prefix
    last_checkpoint: object = None  # source checkpoint at the last accepted boundary
    step_log: list[GateEvent] = field(default_factory=list)
    resample_used_at_current_boundary: bool = False
    incomplete: bool = False
    total_source_tokens: int = 0
    boundaries_gated: int = 0
    forced_accepts: int = 0


@dataclass
class GateContext:
    segment_text: str
    segment_steps: list[TokenStep]
    boundary_index: int
    attempt: int


class Scorer:
    """Validity scorer invoked at gates; implementations may ignore either
    the features or the context."""

    def score(self, features: HybridFeature, context: GateContext) -> float:
        raise NotImplementedError

    def check_dims(self, hidden_dim: int | None):
        pass


class ClassifierScorer(Scorer):
    def __init__(self, model: ClassifierModel):
        self.model = model

    def score(self, features: HybridFeature, context: GateContext) -> float:
        return self.model.forward(features.combined)

    def check_dims(self, hidden_dim: int | None):
        if hidden_dim is not None and hidden_dim + STAT_DIM != self.model.input_dim:
            raise DimensionMismatchError(
                f"classifier expects {self.model.input_dim} dims but source provides "
                f"{hidden_dim} + {STAT_DIM}"
            )


class ConstantScorer(Scorer):
    def __init__(self, value: float):
        self.value = float(value)

    def score(self, features: HybridFeature, context: GateContext) -> float:
        return self.value


class OracleScorer(Scorer):
    """Scores from a callable over the gate context (tests and analytic
    experiments)."""

    def __init__(self, fn):
        self.fn = fn

    def score(self, features: HybridFeature, context: GateContext) -> float:
        return float(self.fn(context))


@dataclass
class GenerateResult:
    text: str
    session: ScreeningSession
    trace: TokenTrace


def _attempt_seed(base_seed: int, boundary: int, attempt: int) -> int:
    digest = hashlib.sha256(f"attempt|{base_seed}|{boundary}|{attempt}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _boundary_state(context_text: str, new_len: int) -> tuple[bool, str]:
    """(fired, carry): fired when the trailing meaningful token is a
    statement delimiter that the newest `new_len` characters completed;
    carry is the context tail to prepend to the next lexing window."""
    tokens = lex(context_text)
    last = None
    for tok in reversed(tokens):
        if tok.kind not in (TokenKind.WHITESPACE, TokenKind.COMMENT):
            last = tok
            break
    if last is None:
        return False, context_text
    carry = context_text[last.start :]
    is_delim = (last.kind is TokenKind.PUNCTUATION and last.text == ";") or (
        last.kind is TokenKind.KEYWORD and last.text in ("end", "endcase", "endmodule")
    )
    fired = is_delim and last.end > len(context_text) - new_len
    return fired, carry


def generate(
    prompt: str,
    source: TokenSource,
    scorer: Scorer,
    cfg: ScreeningConfig,
    verify_boundaries_against: TokenTrace | None = None,
) -> GenerateResult:
    """Run the gated decoding loop; returns final text, session log, trace.

    When replaying a recorded trace, pass it as `verify_boundaries_against`
    to cross-check recorded boundary flags against the frontend lexer.
    """
    scorer.check_dims(source.hidden_dim)
    session = ScreeningSession()
    handle = source.begin_session(prompt, cfg.sampling())
    checkpoint = source.snapshot(handle)
    session.last_checkpoint = checkpoint

    trace = TokenTrace(
        meta=TraceMeta(
            pooling=source.pooling_convention,
            stat_scope=cfg.stat_scope,
            model_id=source.model_id,
        )
    )
    accepted_steps = session.accepted_steps
    segment_steps: list[TokenStep] = []
    segment_text = ""
    seg_carry = ""  # lexing context preceding the current segment, fixed per segment
    attempt = 1
    boundary_idx = 0
    step_counter = 0

    while True:
        if step_counter >= cfg.max_tokens:
            session.incomplete = True
            break
        tok: SourceToken | None = source.next_token(handle)
        if tok is None:
            break
        session.total_source_tokens += 1
        token_class = classify_token_text(tok.text)
        step = TokenStep(
            text=tok.text,
            token_class=token_class,
            nll=tok.nll,
            entropy=tok.entropy,
            token_id=tok.token_id,
        )
        segment_steps.append(step)
        segment_text += tok.text
        fired, carry_next = _boundary_state(seg_carry + segment_text, len(tok.text))
        record = TraceStep(
            step=step_counter,
            token_text=tok.text,
            token_id=tok.token_id,
            nll=tok.nll,
            entropy=tok.entropy,
            token_class=token_class,
            is_boundary=fired,
            attempt=attempt,
            hidden_ref=None,
        )
        if verify_boundaries_against is not None:
            _verify_boundary_flag(verify_boundaries_against, tok, fired)
        step_counter += 1

        if fired:
            hidden = source.hidden_states(handle)
            scorer.check_dims(hidden.dim)
            stat_steps = (
                segment_steps if cfg.stat_scope == "segment" else accepted_steps + segment_steps
            )
            features = compute_hybrid(hidden, stat_steps, cfg.feature_params)
            context = GateContext(segment_text, segment_steps, boundary_idx, attempt)
            score = float(scorer.score(features, context))
            record.hidden_ref = len(trace.hidden_blocks)
            trace.hidden_blocks.append(np.asarray(hidden.values, dtype=np.float64))
            trace.steps.append(record)
            session.boundaries_gated += 1

            if score >= cfg.tau:
                session.step_log.append(GateEvent(boundary_idx, score, "accept", attempt))
                session.accepted_text += segment_text
                accepted_steps.extend(segment_steps)
                segment_steps, segment_text = [], ""
                seg_carry = carry_next
                checkpoint = source.snapshot(handle)
                session.last_checkpoint = checkpoint
                boundary_idx += 1
                attempt = 1
                session.resample_used_at_current_boundary = False
            elif attempt <= cfg.max_resamples_per_boundary:
                session.step_log.append(GateEvent(boundary_idx, score, "reject", attempt))
                source.restore(
                    handle, checkpoint, attempt_seed=_attempt_seed(cfg.seed, boundary_idx, attempt)
                )
                segment_steps, segment_text = [], ""
                attempt += 1
                session.resample_used_at_current_boundary = True
            else:
                # Resample budget exhausted: accept anyway so decoding always
                # terminates; downstream validation still sees the event.
                session.step_log.append(GateEvent(boundary_idx, score, "force_accept", attempt))
                session.forced_accepts += 1
                session.accepted_text += segment_text
                accepted_steps.extend(segment_steps)
                segment_steps, segment_text = [], ""
                seg_carry = carry_next
                checkpoint = source.snapshot(handle)
                session.last_checkpoint = checkpoint
                boundary_idx += 1
                attempt = 1
                session.resample_used_at_current_boundary = False
        else:
            trace.steps.append(record)

    final_text = session.accepted_text + segment_text
    return GenerateResult(text=final_text, session=session, trace=trace)


def _verify_boundary_flag(recorded: TokenTrace, tok: SourceToken, fired: bool):
    # Recorded steps are matched by token identity; ambiguous matches are
    # skipped rather than guessed.
    from ..errors import TraceSchemaError

    matches = [
        s for s in recorded.steps if s.token_id == tok.token_id and s.token_text == tok.text
    ]
    if len(matches) == 1 and matches[0].is_boundary != fired:
        raise TraceSchemaError(
            f"recorded boundary flag {matches[0].is_boundary} disagrees with lexer "
            f"classification {fired} at token {tok.text!r} (id {tok.token_id})"
        )


def decode_plain(prompt: str, source: TokenSource, cfg: ScreeningConfig) -> tuple[str, int]:
    """Ungated baseline decode: pull tokens until EOS or the budget."""
    handle = source.begin_session(prompt, cfg.sampling())
    text = ""
    count = 0
    while count < cfg.max_tokens:
        tok = source.next_token(handle)
        if tok is None:
            break
        text += tok.text
        count += 1
    return text, count
