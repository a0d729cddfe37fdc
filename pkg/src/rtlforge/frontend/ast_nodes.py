"""AST node types for the supported Verilog subset.

Every node carries a (start, end) byte span into the original source. Spans
are bookkeeping only: structural equality (`ast_equal`) ignores them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass
from typing import Optional, Union

Span = tuple[int, int]


@dataclass
class Ident:
    name: str
    span: Span = (0, 0)


@dataclass
class Number:
    text: str
    value: int
    width: Optional[int]  # None for unsized literals
    span: Span = (0, 0)


@dataclass
class Unary:
    op: str
    operand: "Expr"
    span: Span = (0, 0)


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span = (0, 0)


@dataclass
class Ternary:
    cond: "Expr"
    then: "Expr"
    other: "Expr"
    span: Span = (0, 0)


@dataclass
class Concat:
    parts: list["Expr"]
    span: Span = (0, 0)


@dataclass
class Select:
    """Bit select base[msb] or part select base[msb:lsb]."""

    base: Ident
    msb: "Expr"
    lsb: Optional["Expr"]
    span: Span = (0, 0)


Expr = Union[Ident, Number, Unary, Binary, Ternary, Concat, Select]


@dataclass
class Range:
    msb: Expr
    lsb: Expr
    span: Span = (0, 0)


@dataclass
class Port:
    direction: str  # input | output | inout
    is_reg: bool
    range: Optional[Range]
    name: str
    span: Span = (0, 0)


@dataclass
class NetDecl:
    kind: str  # wire | reg
    range: Optional[Range]
    names: list[str]
    span: Span = (0, 0)
    name_spans: list[Span] = field(default_factory=list)


@dataclass
class ParamDecl:
    name: str
    value: Expr
    span: Span = (0, 0)


@dataclass
class ContAssign:
    target: Expr
    value: Expr
    span: Span = (0, 0)


@dataclass
class Event:
    edge: Optional[str]  # posedge | negedge | None (plain signal)
    signal: str


@dataclass
class Always:
    events: Optional[list[Event]]  # None means @(*)
    body: "Stmt"
    span: Span = (0, 0)


@dataclass
class Block:
    stmts: list["Stmt"]
    span: Span = (0, 0)


@dataclass
class If:
    cond: Expr
    then_stmt: "Stmt"
    else_stmt: Optional["Stmt"]
    span: Span = (0, 0)


@dataclass
class CaseItem:
    labels: Optional[list[Expr]]  # None for default
    body: "Stmt"
    span: Span = (0, 0)


@dataclass
class Case:
    subject: Expr
    items: list[CaseItem]
    span: Span = (0, 0)


@dataclass
class ProcAssign:
    target: Expr
    value: Expr
    blocking: bool
    span: Span = (0, 0)


Stmt = Union[Block, If, Case, ProcAssign]
ModuleItem = Union[NetDecl, ParamDecl, ContAssign, Always]


@dataclass
class Module:
    name: str
    ports: list[Port]
    items: list[ModuleItem]
    span: Span = (0, 0)


@dataclass
class SourceFile:
    modules: list[Module]
    span: Span = (0, 0)


def ast_equal(a, b) -> bool:
    """Structural equality ignoring spans and other bookkeeping fields."""
    if type(a) is not type(b):
        return False
    if is_dataclass(a):
        for f in fields(a):
            if f.name in ("span", "name_spans"):
                continue
            if not ast_equal(getattr(a, f.name), getattr(b, f.name)):
                return False
        return True
    if isinstance(a, list):
        return len(a) == len(b) and all(ast_equal(x, y) for x, y in zip(a, b))
    return a == b


def walk(node):
    """Yield every dataclass node in the tree, depth-first."""
    if is_dataclass(node):
        yield node
        for f in fields(node):
            yield from walk(getattr(node, f.name))
    elif isinstance(node, list):
        for item in node:
            yield from walk(item)
