"""Statement-boundary scanner for decoded text.

Same lexical rules the consumer toolkit applies: skip whitespace and // or
/* */ comments, read identifier-shaped runs as single tokens, everything
else as single characters. A step completes a boundary when the trailing
meaningful token is ';', 'end', 'endcase', or 'endmodule' and ends inside
the newly appended text.
"""

from __future__ import annotations

BOUNDARY_WORDS = ("end", "endcase", "endmodule")

_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789$")
_WS = set(" \t\r\n\f\v")
_DIGITS = set("0123456789")
_BASE_CHARS = set("bBoOdDhH")
_NUM_BODY = set("0123456789abcdefABCDEFxXzZ?_")


def _scan_number(text: str, i: int) -> int:
    n = len(text)
    j = i
    while j < n and (text[j] in _DIGITS or text[j] == "_"):
        j += 1
    if j < n and text[j] == "'":
        k = j + 1
        if k < n and text[k] in ("s", "S"):
            k += 1
        if k < n and text[k] in _BASE_CHARS:
            k += 1
            m = k
            while m < n and text[m] in _NUM_BODY:
                m += 1
            if m > k:
                return m
    return j


def last_meaningful_token(text: str) -> tuple[str, int, int] | None:
    """(token_text, start, end) of the last non-trivia token, or None."""
    last = None
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in _WS:
            i += 1
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            i = n if j == -1 else j
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            i = n if j == -1 else j + 2
            continue
        if c in _IDENT_START:
            j = i + 1
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            last = (text[i:j], i, j)
            i = j
            continue
        if c in _DIGITS:
            j = _scan_number(text, i)
            last = (text[i:j], i, j)
            i = j
            continue
        last = (c, i, i + 1)
        i += 1
    return last


def boundary_fired(text: str, new_len: int) -> bool:
    """True when the newest `new_len` characters completed a statement
    delimiter at the tail of `text`."""
    last = last_meaningful_token(text)
    if last is None:
        return False
    token, _, end = last
    is_delim = token == ";" or token in BOUNDARY_WORDS
    return is_delim and end > len(text) - new_len
