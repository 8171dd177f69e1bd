"""Lexical analysis for Mel source files.

Atoms begin with a lowercase letter, variables with an uppercase one.
Comments run from ``%`` to end of line and produce no tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from clonewright.errors import LexError

KEYWORDS = frozenset({"fun", "case", "of", "end"})

OPERATORS = frozenset({"++", "+", "-", "*", "/", "!", "="})
PUNCTUATION = frozenset({"->", "(", ")", "{", "}", "[", "]", ",", ";", ".", "|", ":"})


@dataclass(frozen=True)
class Span:
    """Source region: 1-based line/column, start inclusive, end column exclusive."""

    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def render(self) -> str:
        return f"{self.start_line}.{self.start_col}-{self.end_line}.{self.end_col}"

    @property
    def start(self) -> tuple[int, int]:
        return (self.start_line, self.start_col)

    @property
    def end(self) -> tuple[int, int]:
        return (self.end_line, self.end_col)

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def contains_point(self, line: int, col: int) -> bool:
        return self.start <= (line, col) < self.end

    def overlaps(self, other: "Span") -> bool:
        if self.file != other.file:
            return False
        return self.start < other.end and other.start < self.end

    def cover(self, other: "Span") -> "Span":
        return Span(
            self.file,
            *min(self.start, other.start),
            *max(self.end, other.end),
        )


@dataclass(frozen=True)
class Token:
    kind: str  # integer | string | atom | variable | operator | punct | keyword
    lexeme: str
    span: Span = field(compare=False)


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    """Tokenize Mel source. Raises LexError on illegal input."""
    out: list[Token] = []
    pos, line, col = 0, 1, 1
    n = len(text)

    def step(k: int = 1) -> None:
        nonlocal pos, line, col
        for _ in range(k):
            if pos >= n:
                return
            if text[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            step()
            continue
        if ch == "%":
            while pos < n and text[pos] != "\n":
                step()
            continue
        start_pos, start_line, start_col = pos, line, col

        def emit(kind: str) -> None:
            out.append(
                Token(
                    kind,
                    text[start_pos:pos],
                    Span(file, start_line, start_col, line, col),
                )
            )

        if ch.isdigit():
            while pos < n and text[pos].isdigit():
                step()
            emit("integer")
            continue
        if ch == '"':
            step()
            terminated = False
            while pos < n:
                c = text[pos]
                if c == "\n":
                    break
                if c == "\\":
                    step(2)
                    continue
                step()
                if c == '"':
                    terminated = True
                    break
            if not terminated:
                raise LexError(
                    "unterminated string",
                    Span(file, start_line, start_col, line, col),
                )
            emit("string")
            continue
        if ch.isalpha():
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                step()
            lexeme = text[start_pos:pos]
            if lexeme in KEYWORDS:
                emit("keyword")
            elif lexeme[0].isupper():
                emit("variable")
            else:
                emit("atom")
            continue
        two = text[pos : pos + 2]
        if two == "->":
            step(2)
            emit("punct")
            continue
        if two == "++":
            step(2)
            emit("operator")
            continue
        if ch in OPERATORS:
            step()
            emit("operator")
            continue
        if ch in PUNCTUATION:
            step()
            emit("punct")
            continue
        step()
        raise LexError(
            f"illegal character {ch!r}",
            Span(file, start_line, start_col, line, col),
        )
    return out


def string_value(lexeme: str) -> str:
    """Decode a string literal lexeme (with quotes) to its character content."""
    body = lexeme[1:-1]
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            out.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def string_lexeme(value: str) -> str:
    """Encode character content as a Mel string literal."""
    out = ['"']
    for c in value:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        else:
            out.append(c)
    out.append('"')
    return "".join(out)
