"""Catalog of single-perturbation mutation rules.

Five families, 18 rules. Rules marked dynamic=True can produce mutants that
still parse; their invalidity must be established by compiling or simulating
against the anchor. The others are rejected by the frontend parser or its
declaration bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class MutationRule:
    id: str
    family: str  # Punctuation | Keyword | Operator | Declaration | Structural
    description: str
    dynamic: bool  # needs compile/simulation evidence rather than a parse check


_RULES = [
    MutationRule("P1", "Punctuation", "delete a statement-terminating semicolon", False),
    MutationRule("P2", "Punctuation", "delete a comma inside a list", False),
    MutationRule("P3", "Punctuation", "append an extra trailing comma to a list", False),
    MutationRule("P4", "Punctuation", "delete the colon in a width specifier", False),
    MutationRule("K1", "Keyword", "introduce a keyword typo", False),
    MutationRule("K2", "Keyword", "replace a block delimiter with a mismatched one", False),
    MutationRule("K3", "Keyword", "replace a paren/bracket/brace with a mismatched one", False),
    MutationRule("O1", "Operator", "swap blocking and non-blocking assignment operators", True),
    MutationRule("O2", "Operator", "swap logical AND and OR", True),
    MutationRule("O3", "Operator", "misuse a bitwise operator (& <-> |, ^ -> &)", True),
    MutationRule("O4", "Operator", "replace equality == with assignment =", True),
    MutationRule("D1", "Declaration", "remove the declaration of a used internal signal", False),
    MutationRule("D2", "Declaration", "flip a signal's declared type (wire <-> reg)", True),
    MutationRule("D3", "Declaration", "duplicate an existing signal declaration", True),
    MutationRule("D4", "Declaration", "remove or invert a port direction", False),
    MutationRule("S1", "Structural", "move a continuous assign outside the module", False),
    MutationRule("S2", "Structural", "add a second conflicting driver for a signal", True),
]

_BY_ID = {r.id: r for r in _RULES}
FAMILIES = ("Punctuation", "Keyword", "Operator", "Declaration", "Structural")


def list_rules() -> list[MutationRule]:
    """All 18 rules in catalog order."""
    return list(_RULES)


def get_rule(rule_id: str) -> MutationRule:
    try:
        return _BY_ID[rule_id]
    except KeyError:
        raise KeyError(f"unknown mutation rule {rule_id!r}") from None


def rules_in_family(family: str) -> list[MutationRule]:
    if family not in FAMILIES:
        raise KeyError(f"unknown mutation family {family!r}")
    return [r for r in _RULES if r.family == family]
