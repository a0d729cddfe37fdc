"""pass@k and success-rate metrics with stable numerics.

pass@k for one problem with n candidates, c functionally correct:
  1 - C(n-c, k) / C(n, k)
evaluated in product form to avoid large binomials, clamped to [0, 1].
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class CandidateVerdict:
    compiled: bool
    functional: bool

    def __post_init__(self):
        if self.functional and not self.compiled:
            raise ValueError("a candidate cannot be functional without compiling")


@dataclass
class ProblemResult:
    problem_id: str
    verdicts: list[CandidateVerdict] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.verdicts)

    @property
    def c(self) -> int:
        return sum(1 for v in self.verdicts if v.functional)


def pass_at_k(n: int, c: int, k: int) -> float:
    if not (0 <= c <= n):
        raise ValueError(f"need 0 <= c <= n, got c={c}, n={n}")
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if c == 0:
        return 0.0
    if n - c < k:
        return 1.0
    prod = 1.0
    for i in range(k):
        prod *= (n - c - i) / (n - i)
    return min(1.0, max(0.0, 1.0 - prod))


def success_rate(results: list[ProblemResult], criterion: str) -> float:
    """Percentage of candidates across all problems meeting the criterion."""
    if criterion not in ("compile", "functional"):
        raise ValueError("criterion must be 'compile' or 'functional'")
    total = sum(r.n for r in results)
    if total == 0:
        raise ValueError("no candidates to score")
    if criterion == "compile":
        hits = sum(1 for r in results for v in r.verdicts if v.compiled)
    else:
        hits = sum(1 for r in results for v in r.verdicts if v.functional)
    return 100.0 * hits / total


@dataclass
class AggregateReport:
    k_values: list[int]
    mean_pass_at_k: dict[int, float]
    per_problem: list[dict]
    compile_rate: float
    functional_rate: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "k_values": self.k_values,
                "mean_pass_at_k": {str(k): v for k, v in self.mean_pass_at_k.items()},
                "compile_success_rate": self.compile_rate,
                "functional_success_rate": self.functional_rate,
                "problems": self.per_problem,
            },
            indent=2,
            sort_keys=True,
        )

    def write_csv(self, path: str | Path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["problem_id", "n", "c"] + [f"pass@{k}" for k in self.k_values])
            for row in self.per_problem:
                writer.writerow(
                    [row["problem_id"], row["n"], row["c"]]
                    + [f'{row[f"pass@{k}"]:.6f}' for k in self.k_values]
                )


def aggregate(results: list[ProblemResult], k_values: list[int]) -> AggregateReport:
    """Mean pass@k over problems for each k, plus both success rates.

    Problems with n < k contribute pass@min(k, n) is undefined; such
    problems are an input error."""
    if not results:
        raise ValueError("no problems to aggregate")
    per_problem = []
    means = {k: 0.0 for k in k_values}
    for r in results:
        row = {"problem_id": r.problem_id, "n": r.n, "c": r.c}
        for k in k_values:
            value = pass_at_k(r.n, r.c, k)
            row[f"pass@{k}"] = value
            means[k] += value
        per_problem.append(row)
    for k in k_values:
        means[k] /= len(results)
    return AggregateReport(
        k_values=list(k_values),
        mean_pass_at_k=means,
        per_problem=per_problem,
        compile_rate=success_rate(results, "compile"),
        functional_rate=success_rate(results, "functional"),
    )


def read_results(path: str | Path) -> list[ProblemResult]:
    """Load results.jsonl: one problem per line with per-candidate verdicts:
    {"problem_id": ..., "verdicts": [{"compiled": bool, "functional": bool}, ...]}
    """
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            verdicts = [
                CandidateVerdict(bool(v["compiled"]), bool(v["functional"]))
                for v in obj["verdicts"]
            ]
            out.append(ProblemResult(problem_id=str(obj["problem_id"]), verdicts=verdicts))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad results line: {exc}") from exc
    return out
