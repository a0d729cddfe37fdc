"""Serialize an AST back to canonical Verilog text.

Re-parsing the output yields a structurally equal AST (spans aside), which is
the round-trip contract the transform engine relies on.
"""

from __future__ import annotations

from .ast_nodes import (
    Always,
    Binary,
    Block,
    Case,
    Concat,
    ContAssign,
    Ident,
    If,
    Module,
    NetDecl,
    Number,
    ParamDecl,
    Port,
    ProcAssign,
    Range,
    Select,
    SourceFile,
    Ternary,
    Unary,
)

_IND = "  "


def unparse_expr(e, parent_prec: int = 0) -> str:
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Number):
        return e.text
    if isinstance(e, Unary):
        return f"{e.op}{_wrap(e.operand)}"
    if isinstance(e, Binary):
        return f"({unparse_expr(e.left)} {e.op} {unparse_expr(e.right)})"
    if isinstance(e, Ternary):
        return f"({unparse_expr(e.cond)} ? {unparse_expr(e.then)} : {unparse_expr(e.other)})"
    if isinstance(e, Concat):
        return "{" + ", ".join(unparse_expr(p) for p in e.parts) + "}"
    if isinstance(e, Select):
        if e.lsb is None:
            return f"{e.base.name}[{unparse_expr(e.msb)}]"
        return f"{e.base.name}[{unparse_expr(e.msb)}:{unparse_expr(e.lsb)}]"
    raise TypeError(f"cannot unparse {type(e).__name__}")


def _wrap(e) -> str:
    if isinstance(e, (Ident, Number, Select)):
        return unparse_expr(e)
    return f"({unparse_expr(e)})"


def _unparse_range(r: Range) -> str:
    return f"[{unparse_expr(r.msb)}:{unparse_expr(r.lsb)}]"


def _unparse_port(p: Port) -> str:
    parts = [p.direction]
    if p.is_reg:
        parts.append("reg")
    if p.range is not None:
        parts.append(_unparse_range(p.range))
    parts.append(p.name)
    return " ".join(parts)


def _unparse_stmt(s, depth: int) -> list[str]:
    pad = _IND * depth
    if isinstance(s, Block):
        lines = [f"{pad}begin"]
        for st in s.stmts:
            lines.extend(_unparse_stmt(st, depth + 1))
        lines.append(f"{pad}end")
        return lines
    if isinstance(s, If):
        lines = [f"{pad}if ({unparse_expr(s.cond)})"]
        lines.extend(_unparse_stmt(s.then_stmt, depth + 1))
        if s.else_stmt is not None:
            lines.append(f"{pad}else")
            lines.extend(_unparse_stmt(s.else_stmt, depth + 1))
        return lines
    if isinstance(s, Case):
        lines = [f"{pad}case ({unparse_expr(s.subject)})"]
        for item in s.items:
            label = (
                "default"
                if item.labels is None
                else ", ".join(unparse_expr(l) for l in item.labels)
            )
            body = _unparse_stmt(item.body, depth + 2)
            lines.append(f"{_IND * (depth + 1)}{label}:")
            lines.extend(body)
        lines.append(f"{pad}endcase")
        return lines
    if isinstance(s, ProcAssign):
        op = "=" if s.blocking else "<="
        return [f"{pad}{unparse_expr(s.target)} {op} {unparse_expr(s.value)};"]
    raise TypeError(f"cannot unparse statement {type(s).__name__}")


def _unparse_item(item, depth: int) -> list[str]:
    pad = _IND * depth
    if isinstance(item, NetDecl):
        rng = f" {_unparse_range(item.range)}" if item.range else ""
        return [f"{pad}{item.kind}{rng} {', '.join(item.names)};"]
    if isinstance(item, ParamDecl):
        return [f"{pad}parameter {item.name} = {unparse_expr(item.value)};"]
    if isinstance(item, ContAssign):
        return [f"{pad}assign {unparse_expr(item.target)} = {unparse_expr(item.value)};"]
    if isinstance(item, Always):
        if item.events is None:
            sens = "*"
        else:
            sens = " or ".join(
                f"{ev.edge} {ev.signal}" if ev.edge else ev.signal for ev in item.events
            )
        lines = [f"{pad}always @({sens})"]
        lines.extend(_unparse_stmt(item.body, depth + 1))
        return lines
    raise TypeError(f"cannot unparse module item {type(item).__name__}")


def unparse_module(m: Module) -> str:
    header = f"module {m.name}(" + ", ".join(_unparse_port(p) for p in m.ports) + ");"
    lines = [header]
    for item in m.items:
        lines.extend(_unparse_item(item, 1))
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def unparse(sf: SourceFile) -> str:
    return "\n".join(unparse_module(m) for m in sf.modules)
