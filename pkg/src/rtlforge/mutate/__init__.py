"""Single-edit mutant generation for anchor designs."""

from .engine import MutationRecord, Site, enumerate_sites, mutate
from .rules import FAMILIES, MutationRule, get_rule, list_rules, rules_in_family

__all__ = [
    "MutationRecord",
    "Site",
    "enumerate_sites",
    "mutate",
    "FAMILIES",
    "MutationRule",
    "get_rule",
    "list_rules",
    "rules_in_family",
]
