"""The 14 statistical uncertainty features computed from a token trace.

Feature order is frozen; reordering is a schema version bump:
  avg_nll, avg_entropy, max_nll, max_entropy, std_nll,
  low_confidence_token_count, spike_num, mean_spike_value, std_spike_value,
  max_spike_value, max_spike_token_uncertainty, punct_mean_nll,
  keyword_mean_nll, last_k_mean_nll

Conventions (recorded in the metadata of everything that ships these):
entropies are in nats; std is the population standard deviation; a spike is
a step whose NLL exceeds mean + 2 std of the sequence's NLLs; low confidence
means chosen-token probability below 0.1 (NLL above ln 10).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyTraceError
from ..frontend import TokenKind, lex

FEATURE_NAMES = (
    "avg_nll",
    "avg_entropy",
    "max_nll",
    "max_entropy",
    "std_nll",
    "low_confidence_token_count",
    "spike_num",
    "mean_spike_value",
    "std_spike_value",
    "max_spike_value",
    "max_spike_token_uncertainty",
    "punct_mean_nll",
    "keyword_mean_nll",
    "last_k_mean_nll",
)

STAT_DIM = len(FEATURE_NAMES)

TOKEN_CLASSES = ("Punctuation", "Keyword", "Other")


def classify_token_text(text: str) -> str:
    """Lexical class of a decoded token text: the first meaningful lexed
    token decides (Punctuation / Keyword / Other)."""
    for tok in lex(text):
        if tok.kind in (TokenKind.WHITESPACE, TokenKind.COMMENT):
            continue
        if tok.kind is TokenKind.PUNCTUATION:
            return "Punctuation"
        if tok.kind is TokenKind.KEYWORD:
            return "Keyword"
        return "Other"
    return "Other"


@dataclass(frozen=True)
class TokenStep:
    """One generation step: decoded text plus its uncertainty scalars."""

    text: str
    token_class: str  # Punctuation | Keyword | Other
    nll: float
    entropy: float
    token_id: int = -1

    def __post_init__(self):
        if self.nll < 0 or self.entropy < 0:
            raise ValueError("nll and entropy must be non-negative")
        if self.token_class not in TOKEN_CLASSES:
            raise ValueError(f"unknown token class {self.token_class!r}")

    def validate_against_vocab(self, vocab_size: int):
        if self.entropy > math.log(vocab_size) + 1e-9:
            raise ValueError(
                f"entropy {self.entropy} exceeds log vocab size {math.log(vocab_size)}"
            )


@dataclass(frozen=True)
class FeatureParams:
    spike_sigma: float = 2.0
    low_conf_nll: float = math.log(10.0)
    last_k: int = 10


@dataclass
class StatFeatures:
    avg_nll: float
    avg_entropy: float
    max_nll: float
    max_entropy: float
    std_nll: float
    low_confidence_token_count: float
    spike_num: float
    mean_spike_value: float
    std_spike_value: float
    max_spike_value: float
    max_spike_token_uncertainty: float
    punct_mean_nll: float
    keyword_mean_nll: float
    last_k_mean_nll: float
    meta: dict = field(default_factory=dict, compare=False)

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)

    @classmethod
    def from_vector(cls, vec) -> "StatFeatures":
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)
        if vec.shape[0] != STAT_DIM:
            raise ValueError(f"expected {STAT_DIM} features, got {vec.shape[0]}")
        return cls(*[float(x) for x in vec])


def compute_stats(steps: list[TokenStep], params: FeatureParams | None = None) -> StatFeatures:
    """Aggregate the 14 uncertainty features over a step sequence."""
    if not steps:
        raise EmptyTraceError("cannot compute features over an empty trace")
    params = params or FeatureParams()
    nll = np.array([s.nll for s in steps], dtype=np.float64)
    ent = np.array([s.entropy for s in steps], dtype=np.float64)
    mu = float(nll.mean())
    sigma = float(nll.std())  # population std: defined for length-1 traces

    threshold = mu + params.spike_sigma * sigma
    spike_mask = nll > threshold
    spike_vals = nll[spike_mask]
    if spike_vals.size:
        spike_entropies = ent[spike_mask]
        top = int(np.argmax(spike_vals))
        mean_spike = float(spike_vals.mean())
        std_spike = float(spike_vals.std())
        max_spike = float(spike_vals.max())
        max_spike_unc = float(spike_entropies[top])
    else:
        mean_spike = std_spike = max_spike = max_spike_unc = 0.0

    punct = nll[[s.token_class == "Punctuation" for s in steps]]
    keyword = nll[[s.token_class == "Keyword" for s in steps]]
    last_k = nll[-params.last_k :]

    return StatFeatures(
        avg_nll=mu,
        avg_entropy=float(ent.mean()),
        max_nll=float(nll.max()),
        max_entropy=float(ent.max()),
        std_nll=sigma,
        low_confidence_token_count=float(int((nll > params.low_conf_nll).sum())),
        spike_num=float(int(spike_mask.sum())),
        mean_spike_value=mean_spike,
        std_spike_value=std_spike,
        max_spike_value=max_spike,
        max_spike_token_uncertainty=max_spike_unc,
        punct_mean_nll=float(punct.mean()) if punct.size else 0.0,
        keyword_mean_nll=float(keyword.mean()) if keyword.size else 0.0,
        last_k_mean_nll=float(last_k.mean()),
        meta={
            "punct_absent": punct.size == 0,
            "keyword_absent": keyword.size == 0,
            "spikes_absent": spike_vals.size == 0,
            "spike_threshold": threshold,
            "entropy_unit": "nats",
            "params": {
                "spike_sigma": params.spike_sigma,
                "low_conf_nll": params.low_conf_nll,
                "last_k": params.last_k,
            },
        },
    )
