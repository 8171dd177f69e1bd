"""Lexer, parser, binding and printer behaviour, including round-trip properties."""

from __future__ import annotations

import pytest

from clonewright.errors import LexError, ParseError
from clonewright.mel import (
    annotate_bindings,
    parse_module,
    print_expr,
    print_fundef,
    print_module,
    tokenize,
)
from clonewright.mel.parser import parse_body_text, parse_expr_text
from clonewright.mel.syntax import Expr, node_count

from genast import random_module

SUM_POS = """-module(demo).

sum_pos([]) -> 0;
sum_pos([X|Xs]) ->
  V = max(X, 0),
  V + sum_pos(Xs).
"""

NEW_FUN = """new_fun(Msg, N, NewVar_1, NewVar_2) ->
  io:format(NewVar_1),
  timer:sleep(500),
  NewVar_2 ! {msg, Msg, N - 1}."""


class TestTokenize:
    def test_statement_tokens(self):
        toks = tokenize("V = max(X,0),")
        assert [(t.kind, t.lexeme) for t in toks] == [
            ("variable", "V"),
            ("operator", "="),
            ("atom", "max"),
            ("punct", "("),
            ("variable", "X"),
            ("punct", ","),
            ("integer", "0"),
            ("punct", ")"),
            ("punct", ","),
        ]

    def test_empty_input(self):
        assert tokenize("") == []

    def test_comment_only_advances_lines(self):
        assert tokenize("%% only comment\n") == []
        toks = tokenize("%% leading comment\nok")
        assert toks[0].span.start_line == 2

    def test_lexemes_match_source_slices(self):
        src = 'f(X) ->  % comment\n  {X, "s~n", 42} ++ [1|Tail].\n'
        line_starts = [0]
        for i, c in enumerate(src):
            if c == "\n":
                line_starts.append(i + 1)

        def offset(line, col):
            return line_starts[line - 1] + col - 1

        for t in tokenize(src):
            lo = offset(t.span.start_line, t.span.start_col)
            hi = offset(t.span.end_line, t.span.end_col)
            assert src[lo:hi] == t.lexeme

    def test_tokens_in_span_order_non_overlapping(self):
        toks = tokenize('a() -> "x" ++ "y".')
        for a, b in zip(toks, toks[1:]):
            assert a.span.end <= b.span.start

    def test_unterminated_string(self):
        with pytest.raises(LexError):
            tokenize('"abc')
        with pytest.raises(LexError):
            tokenize('"abc\ndef"')

    def test_illegal_character(self):
        with pytest.raises(LexError):
            tokenize("a ? b")

    def test_string_escapes(self):
        (tok,) = tokenize(r'"a\"b\\c\n"')
        assert tok.kind == "string"


class TestParse:
    def test_sum_pos_listing(self):
        m = parse_module(SUM_POS, "demo.mel")
        assert m.name == "demo"
        (fd,) = m.fundefs
        assert (fd.name, fd.arity) == ("sum_pos", 1)
        assert len(fd.clauses) == 2
        second = fd.clauses[1]
        assert [e.kind for e in second.body] == ["match", "binop"]

    def test_minimal_module(self):
        m = parse_module("-module(m). f() -> 1.")
        assert m.name == "m"
        assert [fd.key for fd in m.fundefs] == [("f", 0)]

    def test_operator_precedence(self):
        e = parse_expr_text("1 + 2 * 3")
        assert e.value == "+"
        assert e.children[1].value == "*"
        e = parse_expr_text("(X+3)+4")
        assert e.value == "+" and e.children[0].value == "+"
        e = parse_expr_text("A ! B ! C")
        assert e.children[1].value == "!"
        e = parse_expr_text("[1] ++ [2] ++ [3]")
        assert e.children[1].value == "++"

    def test_match_requires_pattern(self):
        with pytest.raises(ParseError):
            parse_expr_text("f(X) = 1")

    def test_pattern_rejects_calls(self):
        with pytest.raises(ParseError):
            parse_module("-module(m). f(g(1)) -> ok.")

    def test_duplicate_fundef_rejected(self):
        with pytest.raises(ParseError):
            parse_module("-module(m). f() -> 1. f() -> 2.")

    def test_mixed_arity_clauses_rejected(self):
        with pytest.raises(ParseError):
            parse_module("-module(m). f(X) -> X; f(X, Y) -> Y.")

    def test_case_and_fun(self):
        body = parse_body_text("case f(X) of {ok, V} -> V; error -> 0 end, fun(A) -> A + 1 end")
        assert body[0].kind == "case"
        assert body[1].kind == "fun"

    def test_remote_and_varcall(self):
        e = parse_expr_text("io:format(X)")
        assert e.kind == "remote" and e.value == ("io", "format")
        e = parse_expr_text("F(1, 2)")
        assert e.kind == "varcall"

    def test_span_tiling(self):
        src = SUM_POS + "\nlists(T) ->\n  {[1, 2|T], [a], g((T + 1) * 2)}.\n"
        m = parse_module(src, "demo.mel")

        def check(e):
            for c in e.children:
                assert e.span.contains(c.span), (e, c)
                check(c)
            for a, b in zip(e.children, e.children[1:]):
                assert not a.span.overlaps(b.span), (a, b)

        for fd in m.fundefs:
            for cl in fd.clauses:
                for root in (*cl.patterns, *cl.body):
                    check(root)

    def test_span_tiling_random(self):
        from clonewright.mel import print_module

        def check(e):
            for c in e.children:
                assert e.span.contains(c.span)
                check(c)
            for a, b in zip(e.children, e.children[1:]):
                assert not a.span.overlaps(b.span)

        for seed in range(60):
            m = parse_module(print_module(random_module(seed)), "r.mel")
            for fd in m.fundefs:
                for cl in fd.clauses:
                    for root in (*cl.patterns, *cl.body):
                        check(root)

    def test_syntax_error_has_span_and_expectation(self):
        with pytest.raises(ParseError) as exc:
            parse_module("-module(m). f() -> .")
        assert exc.value.span is not None


class TestBindings:
    def test_sum_pos_bindings(self):
        m = parse_module(SUM_POS)
        info = annotate_bindings(m)
        assert not info.errors
        roles = [(o.name, o.role) for o in info.occurrences]
        assert ("X", "def") in roles and ("X", "use") in roles
        assert ("V", "def") in roles and ("V", "use") in roles

    def test_match_defines_then_uses(self):
        m = parse_module("-module(m). f() -> X = 1, X.")
        info = annotate_bindings(m)
        assert not info.errors
        assert [o.role for o in info.occurrences if o.name == "X"] == ["def", "use"]

    def test_use_before_definition_is_error(self):
        m = parse_module("-module(m). f() -> Y.")
        info = annotate_bindings(m)
        assert [e.kind for e in info.errors] == ["use-before-definition"]

    def test_rebinding_is_warning(self):
        m = parse_module("-module(m). f(X) -> X = 1, X.")
        info = annotate_bindings(m)
        assert not info.errors
        assert [w.kind for w in info.warnings] == ["rebinding"]

    def test_rhs_evaluated_before_pattern(self):
        m = parse_module("-module(m). f() -> X = g(X).")
        info = annotate_bindings(m)
        assert [e.kind for e in info.errors] == ["use-before-definition"]

    def test_case_bindings_do_not_escape(self):
        m = parse_module("-module(m). f(X) -> case X of {ok, V} -> V end, V.")
        info = annotate_bindings(m)
        assert [e.kind for e in info.errors] == ["use-before-definition"]

    def test_fun_params_shadow_with_warning(self):
        m = parse_module("-module(m). f(X) -> fun(X) -> X end, X.")
        info = annotate_bindings(m)
        assert not info.errors
        assert any(w.kind == "shadowing" for w in info.warnings)

    def test_deterministic(self):
        m = parse_module(SUM_POS)
        a = annotate_bindings(m)
        b = annotate_bindings(m)
        assert [(o.span, o.role) for o in a.occurrences] == [
            (o.span, o.role) for o in b.occurrences
        ]


class TestPrinter:
    def test_new_fun_listing_is_four_lines(self):
        m = parse_module("-module(x). " + NEW_FUN)
        assert print_fundef(m.fundefs[0]) == NEW_FUN

    def test_atom(self):
        assert print_expr(Expr("atom", "ok")) == "ok"

    def test_minimal_parens(self):
        assert print_expr(parse_expr_text("(X+3)+4")) == "X + 3 + 4"
        assert print_expr(parse_expr_text("4+(5-(3*X))")) == "4 + (5 - 3 * X)"
        assert print_expr(parse_expr_text("(1+2)*3")) == "(1 + 2) * 3"
        assert print_expr(parse_expr_text("[1, 2|T]")) == "[1, 2|T]"

    def test_module_layout(self):
        src = "-module(m).\n\nf() -> 1.\n\ng(X) ->\n  Y = X + 1,\n  {Y, X}.\n"
        assert print_module(parse_module(src)) == src

    def test_roundtrip_random_asts(self):
        for seed in range(200):
            m = random_module(seed)
            text = print_module(m)
            reparsed = parse_module(text, m.file)
            assert reparsed == m, f"seed {seed}:\n{text}"

    def test_print_idempotent_random_asts(self):
        for seed in range(200):
            m = random_module(seed + 1000)
            once = print_module(m)
            twice = print_module(parse_module(once, m.file))
            assert once == twice, f"seed {seed}"


class TestNodeCount:
    def test_counts(self):
        assert node_count(parse_expr_text("(X+3)+4")) == 5
        assert node_count(parse_expr_text("4+(5-(3*X))")) == 7
        assert node_count(parse_expr_text("NewVar_1 + NewVar_2")) == 3
