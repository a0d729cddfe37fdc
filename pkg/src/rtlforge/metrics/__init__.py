"""Generation-quality metrics."""

from .passk import (
    AggregateReport,
    CandidateVerdict,
    ProblemResult,
    aggregate,
    pass_at_k,
    read_results,
    success_rate,
)

__all__ = [
    "AggregateReport", "CandidateVerdict", "ProblemResult", "aggregate",
    "pass_at_k", "read_results", "success_rate",
]
