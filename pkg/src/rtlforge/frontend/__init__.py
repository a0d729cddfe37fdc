"""Verilog subset frontend: lexer, parser, AST, boundary classification."""

from .ast_nodes import (
    Always,
    Binary,
    Block,
    Case,
    CaseItem,
    Concat,
    ContAssign,
    Event,
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
    ast_equal,
    walk,
)
from .parser import ParseDiagnostic, Severity, SourceUnit, check_declarations, parse, parse_number
from .tokens import (
    BOUNDARY_KEYWORDS,
    VERILOG_KEYWORDS,
    Token,
    TokenKind,
    classify_boundary,
    lex,
    lex_with_warnings,
    meaningful,
    text_ends_at_boundary,
)
from .unparse import unparse, unparse_expr, unparse_module

__all__ = [
    "Always", "Binary", "Block", "Case", "CaseItem", "Concat", "ContAssign",
    "Event", "Ident", "If", "Module", "NetDecl", "Number", "ParamDecl", "Port",
    "ProcAssign", "Range", "Select", "SourceFile", "Ternary", "Unary",
    "ast_equal", "walk", "ParseDiagnostic", "Severity", "SourceUnit",
    "check_declarations", "parse", "parse_number", "BOUNDARY_KEYWORDS",
    "VERILOG_KEYWORDS", "Token", "TokenKind", "classify_boundary", "lex",
    "lex_with_warnings", "meaningful", "text_ends_at_boundary", "unparse",
    "unparse_expr", "unparse_module",
]
