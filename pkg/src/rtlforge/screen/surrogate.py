"""Deterministic surrogate traces for desk-scale pipeline runs.

When no model bridge is available, the pipeline's feature/classifier stages
still need token traces. This synthesizer fabricates them from source text:
per-token NLL/entropy are seeded pseudo-random with a parser-informed bump
(tokens at or after the first syntax error read as high-uncertainty), and
hidden rows are hashed token embeddings. The traces follow the exact wire
formats of recorded generations and are labelled model_id="surrogate";
they stand in for a real model's signals, not reproduce them.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from ..frontend import TokenKind, lex, parse
from .trace import TokenTrace, TraceMeta, TraceStep

_CLASS_BY_KIND = {
    TokenKind.PUNCTUATION: "Punctuation",
    TokenKind.KEYWORD: "Keyword",
}


def _unit_rng(*parts) -> np.random.Generator:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _token_embedding(text: str, dim: int) -> np.ndarray:
    rng = _unit_rng("emb", text, dim)
    return rng.normal(0.0, 1.0, size=dim)


def synthesize_trace(text: str, seed: int, hidden_dim: int = 16) -> TokenTrace:
    """Fabricate a full-sequence trace for `text`; deterministic in
    (text, seed, hidden_dim)."""
    tokens = lex(text)
    unit = parse(text)
    error_start = min((d.span[0] for d in unit.errors), default=None)

    steps: list[TraceStep] = []
    rows: list[np.ndarray] = []
    for i, tok in enumerate(tokens):
        rng = _unit_rng("step", seed, i, tok.text)
        nll = float(rng.uniform(0.1, 1.2))
        entropy = float(rng.uniform(0.2, 1.2))
        if error_start is not None and tok.end > error_start:
            nll += float(rng.uniform(1.5, 3.5))
            entropy += float(rng.uniform(0.5, 1.5))
        token_class = _CLASS_BY_KIND.get(tok.kind, "Other")
        if tok.kind in (TokenKind.WHITESPACE, TokenKind.COMMENT):
            token_class = "Other"
            is_boundary = False  # trivia never completes a delimiter
        else:
            is_boundary = (tok.kind is TokenKind.PUNCTUATION and tok.text == ";") or (
                tok.kind is TokenKind.KEYWORD and tok.text in ("end", "endcase", "endmodule")
            )
        noise = _unit_rng("noise", seed, i).normal(0.0, 0.3, size=hidden_dim)
        rows.append(_token_embedding(tok.text, hidden_dim) + nll * 0.2 + noise)
        steps.append(
            TraceStep(
                step=i,
                token_text=tok.text,
                token_id=int.from_bytes(hashlib.sha256(tok.text.encode()).digest()[:3], "little"),
                nll=nll,
                entropy=min(entropy, math.log(50000.0)),
                token_class=token_class,
                is_boundary=is_boundary,
                attempt=1,
                hidden_ref=None,
            )
        )
    if not steps:
        raise ValueError("cannot synthesize a trace for empty text")
    steps[-1].hidden_ref = 0
    return TokenTrace(
        meta=TraceMeta(pooling="full_sequence", stat_scope="full", model_id="surrogate"),
        steps=steps,
        hidden_blocks=[np.array(rows)],
    )
