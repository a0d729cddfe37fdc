"""Site enumeration and application of single-edit mutations.

Every mutant differs from its anchor by exactly one contiguous edit: the
MutationRecord stores the byte range plus original/replacement text, so
`anchor[:start] + mutated_text + anchor[end:]` reproduces the mutant.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from ..frontend import (
    Always,
    Binary,
    Concat,
    ContAssign,
    Ident,
    Module,
    NetDecl,
    ProcAssign,
    Select,
    SourceUnit,
    TokenKind,
    VERILOG_KEYWORDS,
    meaningful,
    unparse_expr,
    walk,
)
from ..errors import AnchorInvalidError
from .rules import MutationRule, get_rule


@dataclass(frozen=True)
class MutationRecord:
    rule_id: str
    site: tuple[int, int]  # byte range in the anchor source
    original_text: str
    mutated_text: str
    seed: int

    def apply(self, anchor_source: str) -> str:
        s, e = self.site
        assert anchor_source[s:e] == self.original_text
        return anchor_source[:s] + self.mutated_text + anchor_source[e:]


@dataclass(frozen=True)
class Site:
    start: int
    end: int
    replacement: str
    note: str = ""

    def key(self):
        return (self.start, self.end, self.replacement)


_DELIM_SWAP = {"begin": "end", "end": "endcase", "endcase": "end", "endmodule": "endcase"}
_BRACKET_SWAP = {"(": "[", ")": "]", "[": "(", "]": ")", "{": "[", "}": "]"}
_BITWISE_SWAP = {"&": "|", "|": "&", "^": "&"}
_RHS_FLIP = {"&": "|", "|": "&", "^": "&", "+": "-", "==": "!="}


def _keyword_typo(word: str) -> str:
    """Drop the last character of long keywords; swap the final pair of short
    ones. Falls back to dropping more if the result is still a keyword."""
    if len(word) >= 4:
        out = word[:-1]
    else:
        out = word[:-2] + word[-1] + word[-2]
    while out in VERILOG_KEYWORDS and len(out) > 1:
        out = out[:-1]
    return out


def _first_module(unit: SourceUnit) -> Module:
    if not unit.ast.modules:
        raise AnchorInvalidError("anchor contains no module")
    return unit.ast.modules[0]


def _operator_token_in_gap(unit: SourceUnit, lo: int, hi: int, texts: tuple[str, ...]):
    for t in meaningful(unit.tokens):
        if t.start >= lo and t.end <= hi and t.kind is TokenKind.OPERATOR and t.text in texts:
            return t
    return None


def _ident_uses(module: Module, name: str) -> int:
    uses = 0
    for node in walk(module):
        if isinstance(node, Ident) and node.name == name:
            uses += 1
    for item in module.items:
        if isinstance(item, Always):
            for ev in item.events or []:
                if ev.signal == name:
                    uses += 1
    return uses


def _driven_names(module: Module) -> set[str]:
    driven: set[str] = set()
    for node in walk(module):
        if isinstance(node, (ContAssign, ProcAssign)):
            tgt = node.target
            driven.add(tgt.base.name if isinstance(tgt, Select) else tgt.name)
    return driven


def _sens_text(always: Always) -> str:
    assert always.events is not None
    return " or ".join(f"{e.edge} {e.signal}" if e.edge else e.signal for e in always.events)


def _flipped_rhs(expr) -> str:
    if isinstance(expr, Binary) and expr.op in _RHS_FLIP:
        flipped = Binary(_RHS_FLIP[expr.op], expr.right, expr.left)
        return unparse_expr(flipped)
    return f"~({unparse_expr(expr)})"


def enumerate_sites(anchor: SourceUnit, rule: MutationRule) -> list[Site]:
    """Every location where `rule` applies, in source order.

    An empty result means the rule is inapplicable to this anchor, which is a
    normal outcome rather than an error.
    """
    if anchor.errors:
        raise AnchorInvalidError("anchor must parse with zero error diagnostics")
    module = _first_module(anchor)
    toks = meaningful(anchor.tokens)
    src = anchor.source
    sites: list[Site] = []

    if rule.id == "P1":
        for t in toks:
            if t.kind is TokenKind.PUNCTUATION and t.text == ";":
                sites.append(Site(t.start, t.end, "", "missing semicolon"))

    elif rule.id == "P2":
        for t in toks:
            if t.kind is TokenKind.PUNCTUATION and t.text == ",":
                sites.append(Site(t.start, t.end, "", "missing comma"))

    elif rule.id == "P3":
        if module.ports:
            pos = module.ports[-1].span[1]
            sites.append(Site(pos, pos, ",", "trailing comma in port list"))
        for item in module.items:
            if isinstance(item, NetDecl) and item.name_spans:
                pos = item.name_spans[-1][1]
                sites.append(Site(pos, pos, ",", "trailing comma in declaration list"))
        for node in walk(module):
            if isinstance(node, Concat) and node.parts:
                pos = node.parts[-1].span[1]
                sites.append(Site(pos, pos, ",", "trailing comma in concatenation"))

    elif rule.id == "P4":
        ranges = [p.range for p in module.ports if p.range] + [
            i.range for i in module.items if isinstance(i, NetDecl) and i.range
        ]
        for rng in ranges:
            for t in toks:
                if (
                    t.kind is TokenKind.PUNCTUATION
                    and t.text == ":"
                    and rng.span[0] <= t.start < rng.span[1]
                ):
                    sites.append(Site(t.start, t.end, "", "missing colon in width specifier"))
                    break

    elif rule.id == "K1":
        for t in toks:
            if t.kind is TokenKind.KEYWORD:
                sites.append(Site(t.start, t.end, _keyword_typo(t.text), f"typo in {t.text!r}"))

    elif rule.id == "K2":
        for t in toks:
            if t.kind is TokenKind.KEYWORD and t.text in _DELIM_SWAP:
                sites.append(
                    Site(t.start, t.end, _DELIM_SWAP[t.text], f"{t.text!r} mismatched")
                )

    elif rule.id == "K3":
        for t in toks:
            if t.kind is TokenKind.PUNCTUATION and t.text in _BRACKET_SWAP:
                sites.append(
                    Site(t.start, t.end, _BRACKET_SWAP[t.text], f"{t.text!r} mismatched")
                )

    elif rule.id == "O1":
        for node in walk(module):
            if isinstance(node, ContAssign):
                t = _operator_token_in_gap(anchor, node.target.span[1], node.value.span[0], ("=",))
                if t:
                    sites.append(Site(t.start, t.end, "<=", "non-blocking in assign context"))
            elif isinstance(node, ProcAssign):
                want = ("=",) if node.blocking else ("<=",)
                repl = "<=" if node.blocking else "="
                t = _operator_token_in_gap(anchor, node.target.span[1], node.value.span[0], want)
                if t:
                    sites.append(Site(t.start, t.end, repl, "assignment operator confusion"))

    elif rule.id == "O2":
        for t in toks:
            if t.kind is TokenKind.OPERATOR and t.text in ("&&", "||"):
                repl = "||" if t.text == "&&" else "&&"
                sites.append(Site(t.start, t.end, repl, "logical operator misuse"))

    elif rule.id == "O3":
        for t in toks:
            if t.kind is TokenKind.OPERATOR and t.text in _BITWISE_SWAP:
                sites.append(Site(t.start, t.end, _BITWISE_SWAP[t.text], "bitwise operator misuse"))

    elif rule.id == "O4":
        for t in toks:
            if t.kind is TokenKind.OPERATOR and t.text == "==":
                sites.append(Site(t.start, t.end, "=", "equality operator confusion"))

    elif rule.id == "D1":
        for item in module.items:
            if isinstance(item, NetDecl) and len(item.names) == 1:
                if _ident_uses(module, item.names[0]) >= 1:
                    sites.append(
                        Site(item.span[0], item.span[1], "", f"remove declaration of {item.names[0]!r}")
                    )

    elif rule.id == "D2":
        for item in module.items:
            if isinstance(item, NetDecl):
                repl = "reg" if item.kind == "wire" else "wire"
                sites.append(
                    Site(item.span[0], item.span[0] + len(item.kind), repl, "type flipped")
                )
        for p in module.ports:
            d = len(p.direction)
            if p.is_reg and src[p.span[0] + d : p.span[0] + d + 4] == " reg":
                # "output reg x" -> "output x"
                sites.append(Site(p.span[0] + d, p.span[0] + d + 4, "", "reg qualifier removed"))
            elif p.direction == "output" and not p.is_reg:
                sites.append(Site(p.span[0] + d, p.span[0] + d, " reg", "reg qualifier added"))

    elif rule.id == "D3":
        for item in module.items:
            if isinstance(item, NetDecl):
                text = src[item.span[0] : item.span[1]]
                sites.append(Site(item.span[1], item.span[1], f"\n  {text}", "repeated declaration"))

    elif rule.id == "D4":
        driven = _driven_names(module)
        for p in module.ports:
            d = len(p.direction)
            end = p.span[0] + d
            if end < len(src) and src[end] == " ":
                end += 1
            sites.append(Site(p.span[0], end, "", f"direction removed from {p.name!r}"))
            if p.direction == "output" and p.name in driven:
                sites.append(
                    Site(p.span[0], p.span[0] + d, "input", f"direction inverted on {p.name!r}")
                )

    elif rule.id == "S1":
        # A true "move" cannot be a single contiguous edit, so the statement
        # is replicated after endmodule instead; the out-of-scope assign is
        # what makes the mutant ill-formed.
        end_kw = None
        for t in reversed(toks):
            if t.kind is TokenKind.KEYWORD and t.text == "endmodule":
                end_kw = t
                break
        if end_kw is not None:
            for item in module.items:
                if isinstance(item, ContAssign):
                    stmt = src[item.span[0] : item.span[1]]
                    sites.append(
                        Site(end_kw.end, end_kw.end, f"\n{stmt}", "assign outside module scope")
                    )

    elif rule.id == "S2":
        for item in module.items:
            if isinstance(item, ContAssign):
                tgt = unparse_expr(item.target)
                dup = f"\n  assign {tgt} = {_flipped_rhs(item.value)};"
                sites.append(Site(item.span[1], item.span[1], dup, f"second driver for {tgt}"))
            elif isinstance(item, Always) and item.events is not None and any(
                e.edge for e in item.events
            ):
                names = sorted(
                    {
                        (n.target.base.name if isinstance(n.target, Select) else n.target.name)
                        for n in walk(item.body)
                        if isinstance(n, ProcAssign)
                    }
                )
                sens = _sens_text(item)
                for name in names:
                    dup = f"\n  always @({sens}) {name} <= ~{name};"
                    sites.append(
                        Site(item.span[1], item.span[1], dup, f"second driver for {name}")
                    )

    else:
        raise KeyError(f"unknown mutation rule {rule.id!r}")

    sites.sort(key=lambda s: (s.start, s.end, s.replacement))
    return sites


def _derive_rng(anchor_source: str, rule_id: str, seed: int) -> random.Random:
    digest = hashlib.sha256(
        f"{rule_id}|{seed}|".encode() + anchor_source.encode()
    ).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


def mutate(
    anchor: SourceUnit, rule: MutationRule | str, seed: int, max_variants: int = 10
) -> list[tuple[str, MutationRecord]]:
    """Generate up to `max_variants` distinct single-edit mutants.

    Site selection is a deterministic function of (anchor, rule, seed):
    when more sites exist than the budget, a seeded uniform sample without
    replacement picks them; chosen sites are emitted in source order.
    """
    if isinstance(rule, str):
        rule = get_rule(rule)
    if max_variants < 1:
        raise ValueError("max_variants must be >= 1")
    sites = enumerate_sites(anchor, rule)
    if not sites:
        return []
    if len(sites) > max_variants:
        rng = _derive_rng(anchor.source, rule.id, seed)
        sites = sorted(rng.sample(sites, max_variants), key=lambda s: (s.start, s.end))
    out: list[tuple[str, MutationRecord]] = []
    seen_texts = {anchor.source}
    for site in sites:
        record = MutationRecord(
            rule_id=rule.id,
            site=(site.start, site.end),
            original_text=anchor.source[site.start : site.end],
            mutated_text=site.replacement,
            seed=seed,
        )
        mutant = record.apply(anchor.source)
        if mutant in seen_texts:
            continue
        seen_texts.add(mutant)
        out.append((mutant, record))
    return out
