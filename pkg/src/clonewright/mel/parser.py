"""Recursive-descent parser for Mel."""

from __future__ import annotations

from clonewright.errors import ParseError
from clonewright.mel.tokens import Span, Token, string_value, tokenize
from clonewright.mel.syntax import Clause, Expr, FunDef, ModuleAst

# Binding powers; higher binds tighter.
_RIGHT_OPS = {"=": 10, "!": 20, "++": 30}
_LEFT_OPS = {"+": 40, "-": 40, "*": 50, "/": 50}

# Counted so the incremental-detection tests can assert "zero parses".
parse_count = 0


class _Parser:
    def __init__(self, tokens: list[Token], file: str):
        self.tokens = tokens
        self.file = file
        self.pos = 0

    # -- token access -------------------------------------------------

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, kind: str, lexeme: str | None = None) -> bool:
        t = self.peek()
        return t is not None and t.kind == kind and (lexeme is None or t.lexeme == lexeme)

    def advance(self) -> Token:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        return t

    def expect(self, kind: str, lexeme: str | None = None) -> Token:
        if self.at(kind, lexeme):
            return self.advance()
        want = lexeme if lexeme is not None else kind
        raise self.error(f"unexpected {self.describe()}", expected=(want,))

    def describe(self) -> str:
        t = self.peek()
        return "end of input" if t is None else repr(t.lexeme)

    def error(self, message: str, expected: tuple[str, ...] = ()) -> ParseError:
        t = self.peek()
        span = t.span if t is not None else self.last_span()
        return ParseError(message, span, expected)

    def last_span(self) -> Span:
        if self.tokens:
            return self.tokens[-1].span
        return Span(self.file, 1, 1, 1, 1)

    def span_between(self, start: Token, end: Token) -> Span:
        return start.span.cover(end.span)

    # -- module structure ---------------------------------------------

    def parse_module(self) -> ModuleAst:
        start = self.expect("operator", "-")
        mod_kw = self.expect("atom")
        if mod_kw.lexeme != "module":
            raise ParseError("expected module attribute", mod_kw.span, ("module",))
        self.expect("punct", "(")
        name = self.expect("atom").lexeme
        self.expect("punct", ")")
        self.expect("punct", ".")
        fundefs: list[FunDef] = []
        seen: set[tuple[str, int]] = set()
        while self.peek() is not None:
            fd = self.parse_fundef()
            if fd.key in seen:
                raise ParseError(
                    f"duplicate definition of {fd.name}/{fd.arity}", fd.span
                )
            seen.add(fd.key)
            fundefs.append(fd)
        _ = start
        return ModuleAst(name, tuple(fundefs), self.file)

    def parse_fundef(self) -> FunDef:
        first = self.peek()
        name, clause = self.parse_clause()
        clauses = [clause]
        while self.at("punct", ";"):
            self.advance()
            cl_name, cl = self.parse_clause()
            if cl_name != name:
                raise ParseError(
                    f"clause name {cl_name!r} does not match {name!r}", cl.span
                )
            clauses.append(cl)
        dot = self.expect("punct", ".")
        arity = len(clauses[0].patterns)
        for cl in clauses:
            if len(cl.patterns) != arity:
                raise ParseError(
                    f"clause of {name} has arity {len(cl.patterns)}, expected {arity}",
                    cl.span,
                )
        return FunDef(name, arity, tuple(clauses), self.span_between(first, dot))

    def parse_clause(self) -> tuple[str, Clause]:
        name_tok = self.expect("atom")
        self.expect("punct", "(")
        patterns: list[Expr] = []
        if not self.at("punct", ")"):
            patterns.append(self.parse_pattern())
            while self.at("punct", ","):
                self.advance()
                patterns.append(self.parse_pattern())
        self.expect("punct", ")")
        self.expect("punct", "->")
        body = self.parse_body()
        end = self.tokens[self.pos - 1]
        clause = Clause(tuple(patterns), tuple(body), self.span_between(name_tok, end))
        return name_tok.lexeme, clause

    def parse_body(self) -> list[Expr]:
        body = [self.parse_expr()]
        while self.at("punct", ","):
            self.advance()
            body.append(self.parse_expr())
        return body

    # -- expressions ----------------------------------------------------

    def parse_expr(self, min_bp: int = 0) -> Expr:
        lhs = self.parse_primary()
        while True:
            t = self.peek()
            if t is None or t.kind != "operator":
                break
            op = t.lexeme
            if op in _RIGHT_OPS:
                bp = _RIGHT_OPS[op]
                if bp < min_bp:
                    break
                self.advance()
                rhs = self.parse_expr(bp)
                span = lhs.span.cover(rhs.span)
                if op == "=":
                    self.require_pattern(lhs)
                    lhs = Expr("match", None, (lhs, rhs), span)
                else:
                    lhs = Expr("binop", op, (lhs, rhs), span)
            elif op in _LEFT_OPS:
                bp = _LEFT_OPS[op]
                if bp < min_bp:
                    break
                self.advance()
                rhs = self.parse_expr(bp + 1)
                lhs = Expr("binop", op, (lhs, rhs), lhs.span.cover(rhs.span))
            else:
                break
        return lhs

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input", expected=("expression",))
        if t.kind == "integer":
            self.advance()
            return Expr("int", int(t.lexeme), (), t.span)
        if t.kind == "string":
            self.advance()
            return Expr("str", string_value(t.lexeme), (), t.span)
        if t.kind == "variable":
            self.advance()
            var = Expr("var", t.lexeme, (), t.span)
            if self.at("punct", "("):
                args, close = self.parse_args()
                return Expr("varcall", None, (var, *args), t.span.cover(close.span))
            return var
        if t.kind == "atom":
            self.advance()
            if self.at("punct", ":"):
                self.advance()
                name = self.expect("atom")
                if not self.at("punct", "("):
                    raise self.error("remote reference requires arguments", expected=("(",))
                args, close = self.parse_args()
                return Expr(
                    "remote",
                    (t.lexeme, name.lexeme),
                    tuple(args),
                    t.span.cover(close.span),
                )
            if self.at("punct", "("):
                args, close = self.parse_args()
                return Expr("call", t.lexeme, tuple(args), t.span.cover(close.span))
            return Expr("atom", t.lexeme, (), t.span)
        if t.kind == "punct" and t.lexeme == "(":
            self.advance()
            inner = self.parse_expr()
            close = self.expect("punct", ")")
            # Re-span to the parenthesized extent so spans tile the tokens.
            return Expr(inner.kind, inner.value, inner.children, t.span.cover(close.span))
        if t.kind == "punct" and t.lexeme == "{":
            return self.parse_tuple(self.parse_expr)
        if t.kind == "punct" and t.lexeme == "[":
            return self.parse_list(self.parse_expr)
        if t.kind == "keyword" and t.lexeme == "fun":
            return self.parse_fun()
        if t.kind == "keyword" and t.lexeme == "case":
            return self.parse_case()
        raise self.error(f"unexpected {self.describe()}", expected=("expression",))

    def parse_args(self) -> tuple[list[Expr], Token]:
        self.expect("punct", "(")
        args: list[Expr] = []
        if not self.at("punct", ")"):
            args.append(self.parse_expr())
            while self.at("punct", ","):
                self.advance()
                args.append(self.parse_expr())
        close = self.expect("punct", ")")
        return args, close

    def parse_tuple(self, element) -> Expr:
        open_tok = self.expect("punct", "{")
        elems: list[Expr] = []
        if not self.at("punct", "}"):
            elems.append(element())
            while self.at("punct", ","):
                self.advance()
                elems.append(element())
        close = self.expect("punct", "}")
        return Expr("tuple", None, tuple(elems), open_tok.span.cover(close.span))

    def parse_list(self, element) -> Expr:
        open_tok = self.expect("punct", "[")
        if self.at("punct", "]"):
            close = self.advance()
            return Expr("nil", None, (), open_tok.span.cover(close.span))
        elems = [element()]
        while self.at("punct", ","):
            self.advance()
            elems.append(element())
        if self.at("punct", "|"):
            self.advance()
            tail = element()
        else:
            tail = None
        close = self.expect("punct", "]")
        # Desugared cons cells get nested spans (element start to closing
        # bracket) so sibling spans stay disjoint; the outermost covers the
        # whole bracketed extent.
        if tail is not None:
            out = tail
        else:
            out = Expr("nil", None, (), close.span)
        for e in reversed(elems[1:]):
            out = Expr("cons", None, (e, out), e.span.cover(close.span))
        out = Expr("cons", None, (elems[0], out), open_tok.span.cover(close.span))
        return out

    def parse_fun(self) -> Expr:
        start = self.expect("keyword", "fun")
        self.expect("punct", "(")
        params: list[Expr] = []
        if not self.at("punct", ")"):
            params.append(self.parse_pattern())
            while self.at("punct", ","):
                self.advance()
                params.append(self.parse_pattern())
        self.expect("punct", ")")
        self.expect("punct", "->")
        body = self.parse_body()
        end = self.expect("keyword", "end")
        return Expr(
            "fun",
            len(params),
            (*params, *body),
            start.span.cover(end.span),
        )

    def parse_case(self) -> Expr:
        start = self.expect("keyword", "case")
        scrutinee = self.parse_expr()
        self.expect("keyword", "of")
        clauses = [self.parse_case_clause()]
        while self.at("punct", ";"):
            self.advance()
            clauses.append(self.parse_case_clause())
        end = self.expect("keyword", "end")
        return Expr(
            "case",
            None,
            (scrutinee, *clauses),
            start.span.cover(end.span),
        )

    def parse_case_clause(self) -> Expr:
        pattern = self.parse_pattern()
        self.expect("punct", "->")
        body = self.parse_body()
        end = self.tokens[self.pos - 1]
        return Expr(
            "caseclause",
            None,
            (pattern, *body),
            pattern.span.cover(end.span),
        )

    # -- patterns -------------------------------------------------------

    def parse_pattern(self) -> Expr:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input", expected=("pattern",))
        if t.kind == "variable":
            self.advance()
            return Expr("var", t.lexeme, (), t.span)
        if t.kind == "integer":
            self.advance()
            return Expr("int", int(t.lexeme), (), t.span)
        if t.kind == "string":
            self.advance()
            return Expr("str", string_value(t.lexeme), (), t.span)
        if t.kind == "atom":
            self.advance()
            return Expr("atom", t.lexeme, (), t.span)
        if t.kind == "punct" and t.lexeme == "{":
            return self.parse_tuple(self.parse_pattern)
        if t.kind == "punct" and t.lexeme == "[":
            return self.parse_list(self.parse_pattern)
        raise self.error(f"unexpected {self.describe()} in pattern", expected=("pattern",))

    def require_pattern(self, e: Expr) -> None:
        from clonewright.mel.syntax import PATTERN_KINDS

        if e.kind not in PATTERN_KINDS:
            raise ParseError("left side of = must be a pattern", e.span)
        for c in e.children:
            self.require_pattern(c)


def parse(tokens: list[Token], file: str | None = None) -> ModuleAst:
    """Parse a token sequence into a module AST."""
    global parse_count
    parse_count += 1
    if not tokens:
        raise ParseError("empty input: expected -module attribute", Span(file or "<input>", 1, 1, 1, 1))
    return _Parser(tokens, file or tokens[0].span.file).parse_module()


def parse_module(text: str, file: str = "<input>") -> ModuleAst:
    """Convenience: tokenize then parse."""
    return parse(tokenize(text, file), file)


def parse_expr_text(text: str, file: str = "<expr>") -> Expr:
    """Parse a single expression (testing/search helper)."""
    p = _Parser(tokenize(text, file), file)
    e = p.parse_expr()
    if p.peek() is not None:
        raise p.error(f"trailing input {p.describe()}")
    return e


def parse_body_text(text: str, file: str = "<body>") -> tuple[Expr, ...]:
    """Parse a comma-separated expression sequence."""
    p = _Parser(tokenize(text, file), file)
    body = p.parse_body()
    if p.peek() is not None:
        raise p.error(f"trailing input {p.describe()}")
    return tuple(body)
