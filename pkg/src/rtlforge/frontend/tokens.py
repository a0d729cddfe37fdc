"""Lexer for the supported Verilog subset.

Lexing is total: any byte string produces a token stream whose concatenated
texts reproduce the input exactly. Unknown characters become single-character
Punctuation tokens and are reported on a warning channel rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto


class TokenKind(Enum):
    KEYWORD = auto()
    IDENTIFIER = auto()
    PUNCTUATION = auto()
    OPERATOR = auto()
    NUMERIC_LITERAL = auto()
    WHITESPACE = auto()
    COMMENT = auto()


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind
    start: int
    end: int

    def __repr__(self):
        return f"Token({self.kind.name}, {self.text!r}, {self.start}:{self.end})"


# IEEE 1364-2001 reserved words. The grammar supports a subset of these, but
# lexical classification (keyword_mean_nll, boundary detection) uses the full
# list so generated code outside the grammar still classifies sensibly.
VERILOG_KEYWORDS = frozenset(
    """
    always and assign automatic begin buf bufif0 bufif1 case casex casez cell
    cmos config deassign default defparam design disable edge else end endcase
    endconfig endfunction endgenerate endmodule endprimitive endspecify
    endtable endtask event for force forever fork function generate genvar
    highz0 highz1 if ifnone incdir include initial inout input instance
    integer join large liblist library localparam macromodule medium module
    nand negedge nmos nor noshowcancelled not notif0 notif1 or output
    parameter pmos posedge primitive pull0 pull1 pulldown pullup
    pulsestyle_ondetect pulsestyle_onevent rcmos real realtime reg release
    repeat rnmos rpmos rtran rtranif0 rtranif1 scalared showcancelled signed
    small specify specparam strong0 strong1 supply0 supply1 table task time
    tran tranif0 tranif1 tri tri0 tri1 triand trior trireg unsigned use
    vectored wait wand weak0 weak1 while wire wor xnor xor
    """.split()
)

# Statement delimiters that close a gated decoding segment.
BOUNDARY_KEYWORDS = frozenset({"end", "endcase", "endmodule"})

_OPERATORS_3 = ("===", "!==", "<<<", ">>>")
_OPERATORS_2 = ("<=", ">=", "==", "!=", "&&", "||", "<<", ">>")
_OPERATORS_1 = set("=+-*/%&|^~!<>?")
_PUNCTUATION = set("()[]{};,:.@#")

_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789$")
_DIGITS = set("0123456789")
_WS = set(" \t\r\n\f\v")
_BASE_CHARS = set("bBoOdDhH")
_NUM_BODY = set("0123456789abcdefABCDEFxXzZ?_")


def _scan_number(src: str, i: int) -> int:
    """Return the end index of a numeric literal starting at i.

    Handles plain decimals (42, 1_000) and based literals (8'hFF, 4'sb1010).
    A lone size with a malformed base suffix stops before the apostrophe.
    """
    n = len(src)
    j = i
    while j < n and (src[j] in _DIGITS or src[j] == "_"):
        j += 1
    if j < n and src[j] == "'":
        k = j + 1
        if k < n and src[k] in ("s", "S"):
            k += 1
        if k < n and src[k] in _BASE_CHARS:
            k += 1
            m = k
            while m < n and src[m] in _NUM_BODY:
                m += 1
            if m > k:
                return m
    return j


def lex_with_warnings(source: str) -> tuple[list[Token], list[tuple[str, int, int]]]:
    """Lex `source`, returning tokens plus (message, start, end) warnings."""
    tokens: list[Token] = []
    warnings: list[tuple[str, int, int]] = []
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c in _WS:
            j = i + 1
            while j < n and source[j] in _WS:
                j += 1
            tokens.append(Token(source[i:j], TokenKind.WHITESPACE, i, j))
            i = j
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "/":
            j = source.find("\n", i)
            j = n if j == -1 else j
            tokens.append(Token(source[i:j], TokenKind.COMMENT, i, j))
            i = j
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "*":
            j = source.find("*/", i + 2)
            if j == -1:
                warnings.append(("unterminated block comment", i, n))
                j = n
            else:
                j += 2
            tokens.append(Token(source[i:j], TokenKind.COMMENT, i, j))
            i = j
            continue
        if c in _IDENT_START:
            j = i + 1
            while j < n and source[j] in _IDENT_CONT:
                j += 1
            text = source[i:j]
            kind = TokenKind.KEYWORD if text in VERILOG_KEYWORDS else TokenKind.IDENTIFIER
            tokens.append(Token(text, kind, i, j))
            i = j
            continue
        if c in _DIGITS:
            j = _scan_number(source, i)
            tokens.append(Token(source[i:j], TokenKind.NUMERIC_LITERAL, i, j))
            i = j
            continue
        if c == "'":
            # Based literal with implicit 32-bit size, e.g. 'b1010.
            k = i + 1
            if k < n and source[k] in ("s", "S"):
                k += 1
            if k < n and source[k] in _BASE_CHARS:
                k += 1
                m = k
                while m < n and source[m] in _NUM_BODY:
                    m += 1
                if m > k:
                    tokens.append(Token(source[i:m], TokenKind.NUMERIC_LITERAL, i, m))
                    i = m
                    continue
            warnings.append((f"unexpected character {c!r}", i, i + 1))
            tokens.append(Token(c, TokenKind.PUNCTUATION, i, i + 1))
            i += 1
            continue
        three = source[i : i + 3]
        if three in _OPERATORS_3:
            tokens.append(Token(three, TokenKind.OPERATOR, i, i + 3))
            i += 3
            continue
        two = source[i : i + 2]
        if two in _OPERATORS_2:
            tokens.append(Token(two, TokenKind.OPERATOR, i, i + 2))
            i += 2
            continue
        if c in _OPERATORS_1:
            tokens.append(Token(c, TokenKind.OPERATOR, i, i + 1))
            i += 1
            continue
        if c in _PUNCTUATION:
            tokens.append(Token(c, TokenKind.PUNCTUATION, i, i + 1))
            i += 1
            continue
        warnings.append((f"unexpected character {c!r}", i, i + 1))
        tokens.append(Token(c, TokenKind.PUNCTUATION, i, i + 1))
        i += 1
    return tokens, warnings


def lex(source: str) -> list[Token]:
    """Lex `source` into a lossless token stream (warnings discarded)."""
    return lex_with_warnings(source)[0]


def meaningful(tokens: list[Token]) -> list[Token]:
    """Drop whitespace and comment tokens."""
    return [t for t in tokens if t.kind not in (TokenKind.WHITESPACE, TokenKind.COMMENT)]


def classify_boundary(tokens: list[Token]) -> bool:
    """True iff the stream currently ends at a statement boundary.

    A boundary is a trailing ';' or one of the closing keywords
    end / endcase / endmodule, ignoring whitespace and comments.
    """
    for tok in reversed(tokens):
        if tok.kind in (TokenKind.WHITESPACE, TokenKind.COMMENT):
            continue
        if tok.kind is TokenKind.PUNCTUATION and tok.text == ";":
            return True
        return tok.kind is TokenKind.KEYWORD and tok.text in BOUNDARY_KEYWORDS
    return False


def text_ends_at_boundary(text: str) -> bool:
    """Boundary check applied directly to decoded text."""
    return classify_boundary(lex(text))
