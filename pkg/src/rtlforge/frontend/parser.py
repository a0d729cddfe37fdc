"""Recursive-descent parser for the supported Verilog subset.

Supported constructs:
  - ANSI-style module headers with input/output/inout ports, optional `reg`
    and `[msb:lsb]` ranges on ports
  - wire / reg declarations with ranges and comma-separated declarators
  - parameter declarations
  - continuous `assign`
  - always @(*) and always @(posedge/negedge ...) with `or`/`,` event lists
  - begin/end blocks, if/else, case/endcase with default
  - blocking (=) and non-blocking (<=) assignments
  - expressions: ternary, logical, bitwise, equality, relational, shift,
    arithmetic, unary, concatenation, bit/part select, sized/unsized literals

The parser never aborts: malformed input yields Error diagnostics plus a
best-effort partial AST. Declaration bookkeeping (undeclared identifiers,
assignments to input ports, repeated declarations) runs after parsing and
contributes to the same diagnostics list, so "zero Error diagnostics" means
the unit conforms to the subset grammar and its declaration rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Optional

from .ast_nodes import (
    Always,
    Binary,
    Block,
    Case,
    CaseItem,
    Concat,
    ContAssign,
    Event,
    Expr,
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
    Stmt,
    Ternary,
    Unary,
    walk,
)
from .tokens import Token, TokenKind, lex_with_warnings, meaningful


class Severity(Enum):
    ERROR = auto()
    WARNING = auto()


@dataclass(frozen=True)
class ParseDiagnostic:
    message: str
    span: tuple[int, int]
    severity: Severity

    def __str__(self):
        tag = "error" if self.severity is Severity.ERROR else "warning"
        return f"{tag} [{self.span[0]}:{self.span[1]}]: {self.message}"


@dataclass
class SourceUnit:
    source: str
    tokens: list[Token]
    ast: SourceFile
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[ParseDiagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    @property
    def is_valid(self) -> bool:
        return not self.errors


class _ParseFailure(Exception):
    def __init__(self, message: str, span: tuple[int, int]):
        super().__init__(message)
        self.message = message
        self.span = span


def parse_number(text: str) -> tuple[int, Optional[int]]:
    """Resolve a literal to (value, width); width None when unsized.

    x/z/? digits resolve to 0, matching the two-state evaluation model used
    by the internal simulator.
    """
    raw = text.replace("_", "")
    if "'" not in raw:
        return int(raw), None
    size_str, rest = raw.split("'", 1)
    if rest and rest[0] in ("s", "S"):
        rest = rest[1:]
    base = {"b": 2, "o": 8, "d": 10, "h": 16}[rest[0].lower()]
    digits = rest[1:]
    for junk in "xXzZ?":
        digits = digits.replace(junk, "0")
    value = int(digits, base) if digits else 0
    width = int(size_str) if size_str else 32
    if width:
        value &= (1 << width) - 1
    return value, width


class _Parser:
    def __init__(self, tokens: list[Token], source_len: int):
        self.toks = tokens
        self.pos = 0
        self.end = source_len
        self.diagnostics: list[ParseDiagnostic] = []

    # ---- token navigation ----

    def _cur(self) -> Optional[Token]:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def _span(self) -> tuple[int, int]:
        t = self._cur()
        return (t.start, t.end) if t else (self.end, self.end)

    def _at(self, text: str) -> bool:
        t = self._cur()
        return t is not None and t.text == text

    def _at_kind(self, kind: TokenKind) -> bool:
        t = self._cur()
        return t is not None and t.kind is kind

    def _advance(self) -> Token:
        t = self._cur()
        if t is None:
            raise _ParseFailure("unexpected end of input", self._span())
        self.pos += 1
        return t

    def _expect(self, text: str) -> Token:
        t = self._cur()
        if t is None or t.text != text:
            got = repr(t.text) if t else "end of input"
            raise _ParseFailure(f"expected {text!r}, got {got}", self._span())
        return self._advance()

    def _expect_ident(self) -> Token:
        t = self._cur()
        if t is None or t.kind is not TokenKind.IDENTIFIER:
            got = repr(t.text) if t else "end of input"
            raise _ParseFailure(f"expected identifier, got {got}", self._span())
        return self._advance()

    def _error(self, message: str, span: tuple[int, int]):
        self.diagnostics.append(ParseDiagnostic(message, span, Severity.ERROR))

    def _sync_to_semicolon(self, stop_words=("endmodule", "end", "endcase")):
        while (t := self._cur()) is not None:
            if t.text == ";":
                self.pos += 1
                return
            if t.text in stop_words:
                return
            self.pos += 1

    # ---- top level ----

    def parse_source(self) -> SourceFile:
        modules: list[Module] = []
        start = self._span()[0] if self._cur() else 0
        while self._cur() is not None:
            if self._at("module"):
                modules.append(self._parse_module())
            else:
                t = self._advance()
                self._error(f"unexpected {t.text!r} at top level", (t.start, t.end))
        return SourceFile(modules, (start, self.end))

    def _parse_module(self) -> Module:
        kw = self._expect("module")
        try:
            name = self._expect_ident().text
        except _ParseFailure as e:
            self._error(e.message, e.span)
            name = "<anonymous>"
        ports: list[Port] = []
        try:
            self._expect("(")
            if not self._at(")"):
                ports.append(self._parse_port())
                while self._at(","):
                    self._advance()
                    ports.append(self._parse_port())
            self._expect(")")
            self._expect(";")
        except _ParseFailure as e:
            self._error(e.message, e.span)
            self._sync_to_semicolon()
        items = []
        while (t := self._cur()) is not None and t.text != "endmodule":
            if t.text == "module":
                self._error("missing 'endmodule'", (t.start, t.end))
                break
            try:
                items.append(self._parse_module_item())
            except _ParseFailure as e:
                self._error(e.message, e.span)
                before = self.pos
                self._sync_to_semicolon()
                if self.pos == before:
                    break
        end = self.end
        if self._at("endmodule"):
            end = self._advance().end
        else:
            self._error(f"missing 'endmodule' for module {name!r}", self._span())
        return Module(name, ports, items, (kw.start, end))

    def _parse_port(self) -> Port:
        t = self._cur()
        if t is None or t.text not in ("input", "output", "inout"):
            got = repr(t.text) if t else "end of input"
            raise _ParseFailure(f"expected port direction, got {got}", self._span())
        direction = self._advance()
        is_reg = False
        if self._at("reg"):
            self._advance()
            is_reg = True
        rng = self._parse_range() if self._at("[") else None
        name = self._expect_ident()
        return Port(direction.text, is_reg, rng, name.text, (direction.start, name.end))

    def _parse_range(self) -> Range:
        lb = self._expect("[")
        msb = self._parse_expr()
        self._expect(":")
        lsb = self._parse_expr()
        rb = self._expect("]")
        return Range(msb, lsb, (lb.start, rb.end))

    def _parse_module_item(self):
        t = self._cur()
        assert t is not None
        if t.text in ("wire", "reg"):
            return self._parse_net_decl()
        if t.text == "parameter":
            return self._parse_param_decl()
        if t.text == "assign":
            return self._parse_cont_assign()
        if t.text == "always":
            return self._parse_always()
        raise _ParseFailure(f"unexpected {t.text!r} in module body", (t.start, t.end))

    def _parse_net_decl(self) -> NetDecl:
        kw = self._advance()
        rng = self._parse_range() if self._at("[") else None
        first = self._expect_ident()
        names = [first.text]
        name_spans = [(first.start, first.end)]
        while self._at(","):
            self._advance()
            nxt = self._expect_ident()
            names.append(nxt.text)
            name_spans.append((nxt.start, nxt.end))
        semi = self._expect(";")
        return NetDecl(kw.text, rng, names, (kw.start, semi.end), name_spans)

    def _parse_param_decl(self) -> ParamDecl:
        kw = self._advance()
        name = self._expect_ident().text
        self._expect("=")
        value = self._parse_expr()
        semi = self._expect(";")
        return ParamDecl(name, value, (kw.start, semi.end))

    def _parse_cont_assign(self) -> ContAssign:
        kw = self._advance()
        target = self._parse_lvalue()
        self._expect("=")
        value = self._parse_expr()
        semi = self._expect(";")
        return ContAssign(target, value, (kw.start, semi.end))

    def _parse_always(self) -> Always:
        kw = self._advance()
        self._expect("@")
        self._expect("(")
        events: Optional[list[Event]]
        if self._at("*"):
            self._advance()
            events = None
        else:
            events = [self._parse_event()]
            while self._at("or") or self._at(","):
                self._advance()
                events.append(self._parse_event())
        self._expect(")")
        body = self._parse_stmt()
        return Always(events, body, (kw.start, body.span[1]))

    def _parse_event(self) -> Event:
        edge = None
        if self._at("posedge") or self._at("negedge"):
            edge = self._advance().text
        sig = self._expect_ident().text
        return Event(edge, sig)

    # ---- statements ----

    def _parse_stmt(self) -> Stmt:
        t = self._cur()
        if t is None:
            raise _ParseFailure("expected statement, got end of input", self._span())
        if t.text == "begin":
            return self._parse_block()
        if t.text == "if":
            return self._parse_if()
        if t.text == "case":
            return self._parse_case()
        if t.kind is TokenKind.IDENTIFIER:
            return self._parse_proc_assign()
        raise _ParseFailure(f"unexpected {t.text!r} in statement position", (t.start, t.end))

    def _parse_block(self) -> Block:
        kw = self._advance()
        stmts: list[Stmt] = []
        while (t := self._cur()) is not None and t.text != "end":
            if t.text in ("endmodule", "endcase"):
                break
            try:
                stmts.append(self._parse_stmt())
            except _ParseFailure as e:
                self._error(e.message, e.span)
                before = self.pos
                self._sync_to_semicolon()
                if self.pos == before:
                    break
        end_tok = self._expect("end")
        return Block(stmts, (kw.start, end_tok.end))

    def _parse_if(self) -> If:
        kw = self._advance()
        self._expect("(")
        cond = self._parse_expr()
        self._expect(")")
        then_stmt = self._parse_stmt()
        else_stmt = None
        end = then_stmt.span[1]
        if self._at("else"):
            self._advance()
            else_stmt = self._parse_stmt()
            end = else_stmt.span[1]
        return If(cond, then_stmt, else_stmt, (kw.start, end))

    def _parse_case(self) -> Case:
        kw = self._advance()
        self._expect("(")
        subject = self._parse_expr()
        self._expect(")")
        items: list[CaseItem] = []
        while (t := self._cur()) is not None and t.text != "endcase":
            if t.text == "endmodule":
                break
            try:
                items.append(self._parse_case_item())
            except _ParseFailure as e:
                self._error(e.message, e.span)
                before = self.pos
                self._sync_to_semicolon(stop_words=("endcase", "endmodule", "end"))
                if self.pos == before:
                    break
        end_tok = self._expect("endcase")
        return Case(subject, items, (kw.start, end_tok.end))

    def _parse_case_item(self) -> CaseItem:
        t = self._cur()
        assert t is not None
        if t.text == "default":
            self._advance()
            if self._at(":"):
                self._advance()
            body = self._parse_stmt()
            return CaseItem(None, body, (t.start, body.span[1]))
        labels = [self._parse_expr()]
        while self._at(","):
            self._advance()
            labels.append(self._parse_expr())
        self._expect(":")
        body = self._parse_stmt()
        return CaseItem(labels, body, (t.start, body.span[1]))

    def _parse_proc_assign(self) -> ProcAssign:
        target = self._parse_lvalue()
        t = self._cur()
        if t is None or t.text not in ("=", "<="):
            got = repr(t.text) if t else "end of input"
            raise _ParseFailure(f"expected '=' or '<=', got {got}", self._span())
        op = self._advance()
        value = self._parse_expr()
        semi = self._expect(";")
        return ProcAssign(target, value, op.text == "=", (target.span[0], semi.end))

    def _parse_lvalue(self) -> Expr:
        name = self._expect_ident()
        base = Ident(name.text, (name.start, name.end))
        if self._at("["):
            self._advance()
            msb = self._parse_expr()
            lsb = None
            if self._at(":"):
                self._advance()
                lsb = self._parse_expr()
            rb = self._expect("]")
            return Select(base, msb, lsb, (name.start, rb.end))
        return base

    # ---- expressions (precedence climbing) ----

    _BINARY_LEVELS = [
        ("||",),
        ("&&",),
        ("|",),
        ("^",),
        ("&",),
        ("==", "!="),
        ("<", "<=", ">", ">="),
        ("<<", ">>"),
        ("+", "-"),
        ("*", "/", "%"),
    ]

    def _parse_expr(self) -> Expr:
        return self._parse_ternary()

    def _parse_ternary(self) -> Expr:
        cond = self._parse_binary(0)
        if self._at("?"):
            self._advance()
            then = self._parse_expr()
            self._expect(":")
            other = self._parse_expr()
            return Ternary(cond, then, other, (cond.span[0], other.span[1]))
        return cond

    def _parse_binary(self, level: int) -> Expr:
        if level >= len(self._BINARY_LEVELS):
            return self._parse_unary()
        ops = self._BINARY_LEVELS[level]
        left = self._parse_binary(level + 1)
        while (t := self._cur()) is not None and t.kind is TokenKind.OPERATOR and t.text in ops:
            self._advance()
            right = self._parse_binary(level + 1)
            left = Binary(t.text, left, right, (left.span[0], right.span[1]))
        return left

    def _parse_unary(self) -> Expr:
        t = self._cur()
        if t is not None and t.kind is TokenKind.OPERATOR and t.text in ("~", "!", "-", "+"):
            self._advance()
            operand = self._parse_unary()
            return Unary(t.text, operand, (t.start, operand.span[1]))
        return self._parse_primary()

    def _parse_primary(self) -> Expr:
        t = self._cur()
        if t is None:
            raise _ParseFailure("expected expression, got end of input", self._span())
        if t.kind is TokenKind.NUMERIC_LITERAL:
            self._advance()
            value, width = parse_number(t.text)
            return Number(t.text, value, width, (t.start, t.end))
        if t.kind is TokenKind.IDENTIFIER:
            self._advance()
            base = Ident(t.text, (t.start, t.end))
            if self._at("["):
                self._advance()
                msb = self._parse_expr()
                lsb = None
                if self._at(":"):
                    self._advance()
                    lsb = self._parse_expr()
                rb = self._expect("]")
                return Select(base, msb, lsb, (t.start, rb.end))
            return base
        if t.text == "(":
            self._advance()
            inner = self._parse_expr()
            self._expect(")")
            return inner
        if t.text == "{":
            self._advance()
            parts = [self._parse_expr()]
            while self._at(","):
                self._advance()
                parts.append(self._parse_expr())
            rb = self._expect("}")
            return Concat(parts, (t.start, rb.end))
        raise _ParseFailure(f"unexpected {t.text!r} in expression", (t.start, t.end))


def _declared_names(module: Module) -> dict[str, str]:
    """Map name -> kind ('port:<dir>' | 'wire' | 'reg' | 'parameter')."""
    names: dict[str, str] = {}
    for p in module.ports:
        names.setdefault(p.name, f"port:{p.direction}")
    for item in module.items:
        if isinstance(item, NetDecl):
            for n in item.names:
                names.setdefault(n, item.kind)
        elif isinstance(item, ParamDecl):
            names.setdefault(item.name, "parameter")
    return names


def check_declarations(sf: SourceFile) -> list[ParseDiagnostic]:
    """Declaration bookkeeping: undeclared uses, input-port assignment targets,
    repeated declarations (warning)."""
    diags: list[ParseDiagnostic] = []
    for module in sf.modules:
        declared = _declared_names(module)
        seen: set[str] = set()
        for p in module.ports:
            if p.name in seen:
                diags.append(
                    ParseDiagnostic(f"repeated declaration of {p.name!r}", p.span, Severity.WARNING)
                )
            seen.add(p.name)
        for item in module.items:
            if isinstance(item, NetDecl):
                for n, sp in zip(item.names, item.name_spans or [item.span] * len(item.names)):
                    if n in seen:
                        diags.append(
                            ParseDiagnostic(f"repeated declaration of {n!r}", sp, Severity.WARNING)
                        )
                    seen.add(n)
            elif isinstance(item, ParamDecl):
                if item.name in seen:
                    diags.append(
                        ParseDiagnostic(
                            f"repeated declaration of {item.name!r}", item.span, Severity.WARNING
                        )
                    )
                seen.add(item.name)

        def check_expr(expr):
            for node in walk(expr):
                if isinstance(node, Ident) and node.name not in declared:
                    diags.append(
                        ParseDiagnostic(
                            f"undeclared identifier {node.name!r}", node.span, Severity.ERROR
                        )
                    )

        def target_name(expr) -> tuple[str, tuple[int, int]]:
            if isinstance(expr, Select):
                return expr.base.name, expr.base.span
            return expr.name, expr.span

        for item in module.items:
            if isinstance(item, ContAssign):
                check_expr(item.target)
                check_expr(item.value)
                name, sp = target_name(item.target)
                if declared.get(name) == "port:input":
                    diags.append(
                        ParseDiagnostic(f"assignment to input port {name!r}", sp, Severity.ERROR)
                    )
            elif isinstance(item, ParamDecl):
                check_expr(item.value)
            elif isinstance(item, Always):
                for ev in item.events or []:
                    if ev.signal not in declared:
                        diags.append(
                            ParseDiagnostic(
                                f"undeclared identifier {ev.signal!r}", item.span, Severity.ERROR
                            )
                        )
                for node in walk(item.body):
                    if isinstance(node, ProcAssign):
                        check_expr(node.target)
                        check_expr(node.value)
                        name, sp = target_name(node.target)
                        if declared.get(name) == "port:input":
                            diags.append(
                                ParseDiagnostic(
                                    f"assignment to input port {name!r}", sp, Severity.ERROR
                                )
                            )
                    elif isinstance(node, If):
                        check_expr(node.cond)
                    elif isinstance(node, Case):
                        check_expr(node.subject)
                        for ci in node.items:
                            for lbl in ci.labels or []:
                                check_expr(lbl)
    return diags


def parse(source: str) -> SourceUnit:
    """Parse `source` into a SourceUnit; never raises on malformed input."""
    tokens, lex_warnings = lex_with_warnings(source)
    parser = _Parser(meaningful(tokens), len(source))
    ast = parser.parse_source()
    diagnostics = [
        ParseDiagnostic(msg, (s, e), Severity.WARNING) for msg, s, e in lex_warnings
    ]
    diagnostics.extend(parser.diagnostics)
    if not parser.diagnostics:
        # A broken parse would cascade into bogus "undeclared" reports, so
        # declaration bookkeeping only runs on grammatically clean units.
        diagnostics.extend(check_declarations(ast))
    return SourceUnit(source, tokens, ast, diagnostics)
