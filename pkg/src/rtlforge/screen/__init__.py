"""Boundary-gated screening decoder, token sources, trace formats."""

from .decoder import (
    ClassifierScorer,
    ConstantScorer,
    GateContext,
    GateEvent,
    GenerateResult,
    OracleScorer,
    Scorer,
    ScreeningConfig,
    ScreeningSession,
    decode_plain,
    generate,
)
from .source import (
    BridgeClient,
    ReplaySource,
    SamplingParams,
    ScriptSpec,
    ScriptedSource,
    SourceToken,
    TokenSource,
)
from .trace import (
    TokenTrace,
    TraceMeta,
    TraceStep,
    read_hidden_blocks,
    record_trace,
    replay_trace,
    write_hidden_blocks,
)

__all__ = [
    "ClassifierScorer", "ConstantScorer", "GateContext", "GateEvent",
    "GenerateResult", "OracleScorer", "Scorer", "ScreeningConfig",
    "ScreeningSession", "decode_plain", "generate", "BridgeClient",
    "ReplaySource", "SamplingParams", "ScriptSpec", "ScriptedSource",
    "SourceToken", "TokenSource", "TokenTrace", "TraceMeta", "TraceStep",
    "read_hidden_blocks", "record_trace", "replay_trace", "write_hidden_blocks",
]
