"""Pluggable token sources for the screening decoder.

A TokenSource produces one token per call, supports checkpoint/restore at
statement boundaries (restoring with a fresh attempt seed yields the resample
path), and exposes hidden states for the current partial sequence. Three
implementations: a seeded scripted source for tests and analytic
experiments, a replay source over recorded traces, and a wire-protocol
client for a live model bridge process.
"""

from __future__ import annotations

import base64
import hashlib
import json
import random
import shlex
import socket
import subprocess
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from ..emb import HiddenMatrix
from ..errors import SourceFailureError, TraceSchemaError
from .trace import TokenTrace, TraceStep


@dataclass(frozen=True)
class SourceToken:
    """Raw token emitted by a source; lexical classification happens in the
    decoder (the primary owns it)."""

    text: str
    token_id: int
    nll: float
    entropy: float


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.7
    top_p: float = 0.95
    seed: int = 0


class TokenSource(ABC):
    pooling_convention = "full_sequence"
    model_id = ""

    @abstractmethod
    def begin_session(self, prompt: str, params: SamplingParams):
        """Start a generation session; returns an opaque session handle."""

    @abstractmethod
    def next_token(self, session) -> SourceToken | None:
        """Next token, or None at end of sequence."""

    @abstractmethod
    def snapshot(self, session):
        """Opaque checkpoint for the current position."""

    @abstractmethod
    def restore(self, session, checkpoint, attempt_seed: int | None = None):
        """Rewind to a checkpoint; attempt_seed requests a fresh resample."""

    @abstractmethod
    def hidden_states(self, session) -> HiddenMatrix:
        """Hidden-state matrix for the current partial sequence (scope per
        pooling_convention)."""

    @property
    def hidden_dim(self) -> int | None:
        return None


# ---- scripted source ----


@dataclass(frozen=True)
class ScriptSpec:
    """Statement generator: each statement is independently bad with
    probability bad_prob, per (seed, statement, attempt)."""

    n_statements: int = 20
    bad_prob: float = 0.0
    seed: int = 0
    hidden_dim: int = 4

    @classmethod
    def parse(cls, text: str) -> "ScriptSpec":
        """Parse 'key=value,key=value' CLI syntax."""
        kwargs = {}
        for part in filter(None, text.split(",")):
            key, _, value = part.partition("=")
            key = key.strip()
            if key in ("n_statements", "seed", "hidden_dim"):
                kwargs[key] = int(value)
            elif key == "bad_prob":
                kwargs[key] = float(value)
            else:
                raise ValueError(f"unknown script spec key {key!r}")
        return cls(**kwargs)


def _derive_rng(*parts) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


@dataclass
class _ScriptedSession:
    attempts: dict[int, int] = field(default_factory=dict)  # statement -> attempt
    stmt: int = 0
    pos: int = 0
    segment_rows: list[np.ndarray] = field(default_factory=list)


class ScriptedSource(TokenSource):
    """Deterministic statement stream with controllable per-statement
    badness; hidden states cover the current statement (segment pooling)."""

    pooling_convention = "segment"
    model_id = "scripted"

    def __init__(self, spec: ScriptSpec):
        self.spec = spec

    @property
    def hidden_dim(self) -> int | None:
        return self.spec.hidden_dim

    def _statement_tokens(self, stmt: int, attempt: int) -> list[SourceToken]:
        rng = _derive_rng("script", self.spec.seed, stmt, attempt)
        bad = rng.random() < self.spec.bad_prob
        name = f"{'bad' if bad else 'ok'}_{stmt}"
        texts = ["assign ", f"{name} ", "= ", f"x{rng.randrange(8)}", ";\n"]
        toks = []
        for i, text in enumerate(texts):
            toks.append(
                SourceToken(
                    text=text,
                    token_id=stmt * 101 + attempt * 17 + i,
                    nll=rng.uniform(0.2, 2.5),
                    entropy=rng.uniform(0.1, 1.5),
                )
            )
        return toks

    def _row(self, stmt: int, attempt: int, pos: int) -> np.ndarray:
        rng = _derive_rng("hidden", self.spec.seed, stmt, attempt, pos)
        return np.array([rng.gauss(0.0, 1.0) for _ in range(self.spec.hidden_dim)])

    def begin_session(self, prompt: str, params: SamplingParams):
        return _ScriptedSession()

    def next_token(self, session: _ScriptedSession) -> SourceToken | None:
        if session.stmt >= self.spec.n_statements:
            return None
        attempt = session.attempts.get(session.stmt, 1)
        toks = self._statement_tokens(session.stmt, attempt)
        if session.pos == 0:
            session.segment_rows = []
        tok = toks[session.pos]
        session.segment_rows.append(self._row(session.stmt, attempt, session.pos))
        session.pos += 1
        if session.pos >= len(toks):
            session.stmt += 1
            session.pos = 0
        return tok

    def snapshot(self, session: _ScriptedSession):
        return (session.stmt, session.pos, dict(session.attempts))

    def restore(self, session: _ScriptedSession, checkpoint, attempt_seed: int | None = None):
        stmt, pos, attempts = checkpoint
        session.stmt = stmt
        session.pos = pos
        session.attempts = dict(attempts)
        session.segment_rows = []
        if attempt_seed is not None:
            session.attempts[stmt] = session.attempts.get(stmt, 1) + 1

    def hidden_states(self, session: _ScriptedSession) -> HiddenMatrix:
        rows = session.segment_rows or [np.zeros(self.spec.hidden_dim)]
        return HiddenMatrix(np.array(rows))


# ---- replay source ----


@dataclass
class _Segment:
    attempt: int
    steps: list[TraceStep]
    hidden_ref: int | None


@dataclass
class _ReplaySession:
    boundary: int = 0
    pos: int = 0
    tail_pos: int = 0
    attempts: dict[int, int] = field(default_factory=dict)  # boundary -> attempt
    last_hidden_ref: int | None = None


class ReplaySource(TokenSource):
    """Serves a recorded trace: per boundary, attempt 1 is the recorded first
    segment and a resample serves the recorded alternate when one exists
    (otherwise the same segment is served again, which the decoder then
    force-accepts)."""

    model_id = "replay"

    def __init__(self, trace: TokenTrace):
        self.trace = trace
        self.pooling_convention = trace.meta.pooling
        self.boundaries: list[list[_Segment]] = []
        self.tail: list[TraceStep] = []
        self._segment_trace(trace.steps)

    def _segment_trace(self, steps: list[TraceStep]):
        current: list[TraceStep] = []
        for s in steps:
            current.append(s)
            if s.is_boundary and s.hidden_ref is not None:
                seg = _Segment(s.attempt, current, s.hidden_ref)
                if (
                    seg.attempt > 1
                    and self.boundaries
                    and self.boundaries[-1][-1].attempt < seg.attempt
                ):
                    self.boundaries[-1].append(seg)
                else:
                    self.boundaries.append([seg])
                current = []
        self.tail = current

    @property
    def hidden_dim(self) -> int | None:
        if self.trace.hidden_blocks:
            return self.trace.hidden_blocks[0].shape[1]
        return None

    def begin_session(self, prompt: str, params: SamplingParams):
        return _ReplaySession()

    def _segment(self, session: _ReplaySession) -> _Segment:
        alts = self.boundaries[session.boundary]
        attempt = session.attempts.get(session.boundary, 1)
        return alts[min(attempt, len(alts)) - 1]

    def next_token(self, session: _ReplaySession) -> SourceToken | None:
        if session.boundary >= len(self.boundaries):
            if session.tail_pos >= len(self.tail):
                return None
            s = self.tail[session.tail_pos]
            session.tail_pos += 1
            return SourceToken(s.token_text, s.token_id, s.nll, s.entropy)
        seg = self._segment(session)
        s = seg.steps[session.pos]
        session.pos += 1
        if session.pos >= len(seg.steps):
            session.last_hidden_ref = seg.hidden_ref
            session.boundary += 1
            session.pos = 0
        return SourceToken(s.token_text, s.token_id, s.nll, s.entropy)

    def snapshot(self, session: _ReplaySession):
        return (session.boundary, session.pos, session.tail_pos, dict(session.attempts))

    def restore(self, session: _ReplaySession, checkpoint, attempt_seed: int | None = None):
        boundary, pos, tail_pos, attempts = checkpoint
        session.boundary = boundary
        session.pos = pos
        session.tail_pos = tail_pos
        session.attempts = dict(attempts)
        if attempt_seed is not None:
            session.attempts[boundary] = session.attempts.get(boundary, 1) + 1
        session.last_hidden_ref = None

    def hidden_states(self, session: _ReplaySession) -> HiddenMatrix:
        ref = session.last_hidden_ref
        if ref is None or ref >= len(self.trace.hidden_blocks):
            raise SourceFailureError("no hidden block recorded at this position")
        return HiddenMatrix(self.trace.hidden_blocks[ref])


# ---- bridge wire-protocol client ----


class BridgeClient(TokenSource):
    """TokenSource over the line-delimited JSON bridge protocol.

    Connect with either 'cmd:<command line>' (spawn a process, stdio) or
    'tcp:<host>:<port>'.
    """

    model_id = "bridge"

    def __init__(self, target: str):
        self._proc = None
        self._sock = None
        if target.startswith("cmd:"):
            self._proc = subprocess.Popen(
                shlex.split(target[4:]),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            self._read = self._proc.stdout.readline
            self._write = lambda line: (self._proc.stdin.write(line), self._proc.stdin.flush())
        elif target.startswith("tcp:"):
            host, _, port = target[4:].rpartition(":")
            self._sock = socket.create_connection((host, int(port)))
            self._file = self._sock.makefile("rw")
            self._read = self._file.readline
            self._write = lambda line: (self._file.write(line), self._file.flush())
        else:
            raise ValueError("bridge target must be cmd:<command> or tcp:<host>:<port>")
        self._session_counter = 0
        self._dim: int | None = None

    def _call(self, request: dict) -> dict:
        self._write(json.dumps(request) + "\n")
        line = self._read()
        if not line:
            raise SourceFailureError("bridge closed the connection")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceSchemaError(f"bridge sent invalid JSON: {exc}") from exc
        if not response.get("ok"):
            raise SourceFailureError(f"bridge error: {response.get('error', 'unknown')}")
        return response

    def begin_session(self, prompt: str, params: SamplingParams):
        self._session_counter += 1
        session = f"s{self._session_counter}"
        self._call(
            {
                "op": "begin",
                "session": session,
                "prompt": prompt,
                "temperature": params.temperature,
                "top_p": params.top_p,
                "seed": params.seed,
            }
        )
        return session

    def next_token(self, session) -> SourceToken | None:
        resp = self._call({"op": "next", "session": session})
        if resp.get("eos"):
            return None
        return SourceToken(
            text=resp["token"],
            token_id=int(resp.get("token_id", -1)),
            nll=float(resp["nll"]),
            entropy=float(resp["entropy"]),
        )

    def snapshot(self, session):
        return self._call({"op": "snapshot", "session": session})["checkpoint_id"]

    def restore(self, session, checkpoint, attempt_seed: int | None = None):
        req = {"op": "restore", "session": session, "checkpoint_id": checkpoint}
        if attempt_seed is not None:
            req["seed"] = attempt_seed
        self._call(req)

    def hidden_states(self, session) -> HiddenMatrix:
        resp = self._call({"op": "hidden", "session": session})
        rows, cols = resp["hidden_shape"]
        raw = base64.b64decode(resp["hidden_b64"])
        arr = np.frombuffer(raw, dtype="<f4", count=rows * cols).astype(np.float64)
        self._dim = cols
        return HiddenMatrix(arr.reshape(rows, cols))

    @property
    def hidden_dim(self) -> int | None:
        return self._dim

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()
        if self._sock is not None:
            self._sock.close()
