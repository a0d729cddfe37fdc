"""Semantics-preserving transforms that produce positive variants.

Five transforms: Rename, DeMorgan, CommutativeSwap, TernaryRewrite,
DeclReorder. Each preserves the module's port names, directions, and order;
internal structure and identifiers may change. Positives are emitted in
canonical (unparsed) form.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, fields, is_dataclass, replace

from ..errors import AnchorInvalidError, TransformInapplicableError
from ..frontend import (
    Always,
    Binary,
    Block,
    ContAssign,
    Event,
    Ident,
    If,
    Module,
    NetDecl,
    ParamDecl,
    ProcAssign,
    SourceFile,
    SourceUnit,
    Ternary,
    Unary,
    ast_equal,
    parse,
    unparse,
    walk,
)

TRANSFORMS = ("Rename", "DeMorgan", "CommutativeSwap", "TernaryRewrite", "DeclReorder")

_COMMUTATIVE_OPS = ("+", "*", "&", "|", "^", "==")


@dataclass(frozen=True)
class TransformRecord:
    transform_id: str
    details: str
    seed: int


def _rng_for(anchor_source: str, transform_id: str, seed: int) -> random.Random:
    digest = hashlib.sha256(f"{transform_id}|{seed}|".encode() + anchor_source.encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


def _rebuild(node, mapping: dict[int, object]):
    """Copy a tree, substituting nodes whose id() appears in mapping."""
    if id(node) in mapping:
        return mapping[id(node)]
    if is_dataclass(node):
        return type(node)(**{f.name: _rebuild(getattr(node, f.name), mapping) for f in fields(node)})
    if isinstance(node, list):
        return [_rebuild(x, mapping) for x in node]
    return node


def _rename_tree(node, name_map: dict[str, str]):
    if is_dataclass(node):
        kwargs = {}
        for f in fields(node):
            val = getattr(node, f.name)
            if isinstance(node, Ident) and f.name == "name":
                kwargs[f.name] = name_map.get(val, val)
            elif isinstance(node, NetDecl) and f.name == "names":
                kwargs[f.name] = [name_map.get(n, n) for n in val]
            elif isinstance(node, ParamDecl) and f.name == "name":
                kwargs[f.name] = name_map.get(val, val)
            elif isinstance(node, Event) and f.name == "signal":
                kwargs[f.name] = name_map.get(val, val)
            else:
                kwargs[f.name] = _rename_tree(val, name_map)
        return type(node)(**kwargs)
    if isinstance(node, list):
        return [_rename_tree(x, name_map) for x in node]
    return node


def _first_module(unit: SourceUnit) -> Module:
    if unit.errors:
        raise AnchorInvalidError("anchor must parse with zero error diagnostics")
    if not unit.ast.modules:
        raise AnchorInvalidError("anchor contains no module")
    return unit.ast.modules[0]


def _all_identifiers(module: Module) -> set[str]:
    names = {p.name for p in module.ports} | {module.name}
    for item in module.items:
        if isinstance(item, NetDecl):
            names.update(item.names)
        elif isinstance(item, ParamDecl):
            names.add(item.name)
    for node in walk(module):
        if isinstance(node, Ident):
            names.add(node.name)
    return names


def internal_net_names(module: Module) -> list[str]:
    ports = {p.name for p in module.ports}
    out = []
    for item in module.items:
        if isinstance(item, NetDecl):
            out.extend(n for n in item.names if n not in ports)
    return out


def _transform_rename(module: Module, rng: random.Random):
    nets = internal_net_names(module)
    if not nets:
        raise TransformInapplicableError("no internal nets to rename")
    taken = _all_identifiers(module)
    fresh: list[str] = []
    k = 0
    while len(fresh) < len(nets):
        cand = f"n{k}"
        k += 1
        if cand not in taken:
            fresh.append(cand)
    rng.shuffle(fresh)
    name_map = dict(zip(nets, fresh))
    return _rename_tree(module, name_map), f"renamed {name_map}"


def _demorgan_candidates(module: Module) -> list[Unary]:
    cands = []
    for node in walk(module):
        if (
            isinstance(node, Unary)
            and node.op == "~"
            and isinstance(node.operand, Binary)
            and node.operand.op in ("&", "|")
        ):
            cands.append(node)
    return cands


def _transform_demorgan(module: Module, rng: random.Random):
    cands = _demorgan_candidates(module)
    if not cands:
        raise TransformInapplicableError("no negated conjunction/disjunction")
    node = cands[rng.randrange(len(cands))]
    inner = node.operand
    flipped = "|" if inner.op == "&" else "&"
    new = Binary(flipped, Unary("~", inner.left), Unary("~", inner.right))
    return _rebuild(module, {id(node): new}), f"DeMorgan at bytes {node.span}"


def _transform_commutative(module: Module, rng: random.Random):
    cands = [n for n in walk(module) if isinstance(n, Binary) and n.op in _COMMUTATIVE_OPS]
    if not cands:
        raise TransformInapplicableError("no commutative binary operator")
    node = cands[rng.randrange(len(cands))]
    new = Binary(node.op, node.right, node.left)
    return _rebuild(module, {id(node): new}), f"operand swap of {node.op!r} at bytes {node.span}"


def _single_assign(stmt):
    """Unwrap a statement to a single ProcAssign, or None."""
    if isinstance(stmt, ProcAssign):
        return stmt
    if isinstance(stmt, Block) and len(stmt.stmts) == 1 and isinstance(stmt.stmts[0], ProcAssign):
        return stmt.stmts[0]
    return None


def _transform_ternary(module: Module, rng: random.Random):
    sites: list[tuple[str, object]] = []
    for item in module.items:
        if isinstance(item, ContAssign) and isinstance(item.value, Ternary) and isinstance(item.target, Ident):
            sites.append(("to_if", item))
    for node in walk(module):
        if isinstance(node, If) and node.else_stmt is not None:
            a, b = _single_assign(node.then_stmt), _single_assign(node.else_stmt)
            if a and b and ast_equal(a.target, b.target) and a.blocking == b.blocking:
                sites.append(("to_ternary", node))
    if not sites:
        raise TransformInapplicableError("no ternary/if-else rewrite site")
    kind, node = sites[rng.randrange(len(sites))]
    if kind == "to_ternary":
        a = _single_assign(node.then_stmt)
        b = _single_assign(node.else_stmt)
        new = ProcAssign(a.target, Ternary(node.cond, a.value, b.value), a.blocking)
        return _rebuild(module, {id(node): new}), f"if/else to ternary at bytes {node.span}"
    # Continuous assign with ternary becomes a combinational always block;
    # its target net must become a reg.
    tern: Ternary = node.value
    target: Ident = node.target
    body = If(tern.cond, ProcAssign(target, tern.then, True), ProcAssign(target, tern.other, True))
    new_always = Always(None, body)
    mapping: dict[int, object] = {id(node): new_always}
    for p in module.ports:
        if p.name == target.name and not p.is_reg:
            mapping[id(p)] = replace(p, is_reg=True)
    for item in module.items:
        if isinstance(item, NetDecl) and item.kind == "wire" and item.names == [target.name]:
            mapping[id(item)] = replace(item, kind="reg")
    return _rebuild(module, mapping), f"ternary assign to if/else for {target.name!r}"


def _range_idents(decl: NetDecl) -> set[str]:
    if decl.range is None:
        return set()
    return {n.name for n in walk(decl.range) if isinstance(n, Ident)}


def _transform_declreorder(module: Module, rng: random.Random):
    pairs = []
    for i in range(len(module.items) - 1):
        a, b = module.items[i], module.items[i + 1]
        if isinstance(a, NetDecl) and isinstance(b, NetDecl):
            if not (set(a.names) & _range_idents(b)) and not (set(b.names) & _range_idents(a)):
                pairs.append(i)
    if not pairs:
        raise TransformInapplicableError("no adjacent independent declarations")
    i = pairs[rng.randrange(len(pairs))]
    items = list(module.items)
    items[i], items[i + 1] = items[i + 1], items[i]
    out = replace(module, items=items)
    return out, f"swapped declarations at positions {i} and {i + 1}"


_TRANSFORM_FNS = {
    "Rename": _transform_rename,
    "DeMorgan": _transform_demorgan,
    "CommutativeSwap": _transform_commutative,
    "TernaryRewrite": _transform_ternary,
    "DeclReorder": _transform_declreorder,
}


def transform(anchor: SourceUnit, transform_id: str, seed: int) -> tuple[str, TransformRecord]:
    """Apply one semantics-preserving transform; returns (source, record).

    Raises TransformInapplicableError when the anchor has no applicable site.
    The result parses cleanly and preserves the port interface; both are
    checked before returning.
    """
    if transform_id not in _TRANSFORM_FNS:
        raise KeyError(f"unknown transform {transform_id!r}")
    module = _first_module(anchor)
    rng = _rng_for(anchor.source, transform_id, seed)
    new_module, details = _TRANSFORM_FNS[transform_id](module, rng)
    source = unparse(SourceFile([new_module]))
    check = parse(source)
    if check.errors:
        raise AssertionError(f"transform {transform_id} produced invalid output: {check.errors[0]}")
    _assert_ports_unchanged(module, check.ast.modules[0])
    return source, TransformRecord(transform_id, details, seed)


def _assert_ports_unchanged(before: Module, after: Module):
    old = [(p.direction, p.range is not None, p.name) for p in before.ports]
    new = [(p.direction, p.range is not None, p.name) for p in after.ports]
    if old != new:
        raise AssertionError("transform changed the port interface")


def applicable_transforms(anchor: SourceUnit) -> list[str]:
    """Transform ids that have at least one site on this anchor."""
    out = []
    for tid in TRANSFORMS:
        try:
            transform(anchor, tid, seed=0)
        except TransformInapplicableError:
            continue
        out.append(tid)
    return out


def canonical_internal_rename(unit: SourceUnit) -> SourceFile:
    """Rename internal (non-port) identifiers to positional names."""
    modules = []
    for module in unit.ast.modules:
        ports = {p.name for p in module.ports}
        order: list[str] = []
        for item in module.items:
            if isinstance(item, NetDecl):
                order.extend(n for n in item.names if n not in ports and n not in order)
            elif isinstance(item, ParamDecl):
                if item.name not in order:
                    order.append(item.name)
        name_map = {n: f"__c{i}" for i, n in enumerate(order)}
        modules.append(_rename_tree(module, name_map))
    return SourceFile(modules)


def alpha_equivalent(a: SourceUnit, b: SourceUnit) -> bool:
    """True iff the ASTs are equal after canonical renaming of internal
    identifiers in declaration order."""
    if a.errors or b.errors:
        raise AnchorInvalidError("alpha equivalence requires clean parses")
    return ast_equal(canonical_internal_rename(a), canonical_internal_rename(b))
