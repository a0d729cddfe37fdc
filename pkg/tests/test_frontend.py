import string

from hypothesis import given, settings
from hypothesis import strategies as st

from rtlforge.frontend import (
    TokenKind,
    ast_equal,
    classify_boundary,
    lex,
    parse,
    text_ends_at_boundary,
    unparse,
)


def kinds(tokens):
    return [(t.kind, t.text) for t in tokens if t.kind is not TokenKind.WHITESPACE]


class TestLexer:
    def test_assign_statement_token_kinds(self):
        toks = kinds(lex("assign y = a & b;"))
        assert toks == [
            (TokenKind.KEYWORD, "assign"),
            (TokenKind.IDENTIFIER, "y"),
            (TokenKind.OPERATOR, "="),
            (TokenKind.IDENTIFIER, "a"),
            (TokenKind.OPERATOR, "&"),
            (TokenKind.IDENTIFIER, "b"),
            (TokenKind.PUNCTUATION, ";"),
        ]

    def test_empty_input(self):
        assert lex("") == []

    def test_longest_match_endmodule(self):
        toks = lex("endmodule")
        assert len(toks) == 1
        assert toks[0].kind is TokenKind.KEYWORD and toks[0].text == "endmodule"

    def test_numeric_literals(self):
        for text in ("42", "8'hFF", "4'b1010", "3'd7", "1_000", "4'sb10"):
            toks = lex(text)
            assert len(toks) == 1 and toks[0].kind is TokenKind.NUMERIC_LITERAL, text

    def test_comments_and_spans(self):
        src = "a // line\n/* block */ b"
        toks = lex(src)
        assert [t.kind for t in toks if t.kind is TokenKind.COMMENT] == [
            TokenKind.COMMENT,
            TokenKind.COMMENT,
        ]
        assert "".join(t.text for t in toks) == src

    def test_unknown_character_becomes_punctuation(self):
        toks = lex("a \x01 b")
        bad = [t for t in toks if t.text == "\x01"]
        assert bad and bad[0].kind is TokenKind.PUNCTUATION

    @given(st.text(max_size=200))
    @settings(max_examples=150, deadline=None)
    def test_lossless_any_text(self, text):
        assert "".join(t.text for t in lex(text)) == text

    @given(st.text(alphabet=string.printable, max_size=120))
    @settings(max_examples=100, deadline=None)
    def test_deterministic(self, text):
        assert lex(text) == lex(text)

    @given(st.text(alphabet=string.ascii_lowercase + " ;_", max_size=80))
    @settings(max_examples=100, deadline=None)
    def test_keyword_identifier_disjoint(self, text):
        for t in lex(text):
            assert t.kind is not TokenKind.KEYWORD or t.kind is not TokenKind.IDENTIFIER
            if t.kind is TokenKind.IDENTIFIER:
                from rtlforge.frontend import VERILOG_KEYWORDS

                assert t.text not in VERILOG_KEYWORDS


class TestBoundary:
    def test_semicolon(self):
        assert text_ends_at_boundary("assign y = a & b;")

    def test_trailing_comment_and_whitespace(self):
        assert text_ends_at_boundary("assign y = a & b; //done\n")

    def test_begin_is_not_boundary(self):
        assert not text_ends_at_boundary("always @(posedge clk) begin")

    def test_end_keywords(self):
        assert text_ends_at_boundary("... end")
        assert text_ends_at_boundary("case (x) endcase")
        assert text_ends_at_boundary("module m(); endmodule")

    def test_end_inside_identifier_not_boundary(self):
        assert not text_ends_at_boundary("wire trend")

    def test_empty(self):
        assert not classify_boundary([])


class TestParser:
    def test_corpus_parses_clean(self, corpus_units):
        for name, unit in corpus_units.items():
            assert unit.is_valid, (name, unit.errors[:2])

    def test_missing_semicolon_is_error(self):
        unit = parse("module m(input a, output y);\n  assign y = a & a\nendmodule\n")
        assert unit.errors

    def test_assign_after_endmodule_is_error(self):
        unit = parse("module m(input a, output y);\nendmodule\nassign y = a;\n")
        assert unit.errors

    def test_never_aborts_returns_partial_ast(self):
        unit = parse("module m(input a, output y);\n  wire w1\n  assign y = a;\nendmodule\n")
        assert unit.errors
        assert unit.ast.modules and unit.ast.modules[0].name == "m"

    def test_undeclared_identifier_flagged(self):
        unit = parse("module m(input a, output y);\n  assign y = ghost;\nendmodule\n")
        assert any("undeclared" in str(d) for d in unit.errors)

    def test_assignment_to_input_flagged(self):
        unit = parse("module m(input a, output y);\n  assign a = y;\nendmodule\n")
        assert any("input port" in str(d) for d in unit.errors)

    def test_duplicate_declaration_is_warning_not_error(self):
        unit = parse("module m(input a, output y);\n  wire w;\n  wire w;\n  assign w = a;\n  assign y = w;\nendmodule\n")
        assert unit.is_valid
        assert any("repeated declaration" in str(d) for d in unit.diagnostics)

    def test_roundtrip_stability(self, corpus_units):
        for name, unit in corpus_units.items():
            text = unparse(unit.ast)
            again = parse(text)
            assert again.is_valid, (name, again.errors[:2])
            assert ast_equal(unit.ast, again.ast), name

    def test_spans_cover_tokens(self, corpus_units):
        for unit in corpus_units.values():
            n = len(unit.source)
            for module in unit.ast.modules:
                s, e = module.span
                assert 0 <= s < e <= n

    def test_parse_determinism(self, corpus_units):
        for unit in corpus_units.values():
            again = parse(unit.source)
            assert ast_equal(unit.ast, again.ast)
            assert [d.message for d in unit.diagnostics] == [
                d.message for d in again.diagnostics
            ]


def test_all_node_spans_valid(corpus_units):
    from rtlforge.frontend import walk
    from dataclasses import is_dataclass

    for name, unit in corpus_units.items():
        assert unit.is_valid
        n = len(unit.source)
        for node in walk(unit.ast):
            if not is_dataclass(node) or not hasattr(node, "span"):
                continue
            s, e = node.span
            assert 0 <= s <= e <= n, (name, type(node).__name__, node.span)
