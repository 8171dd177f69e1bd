"""AST for Mel.

A single ``Expr`` node type carries a ``kind`` tag plus a ``value`` payload:

==========  =========================  ====================================
kind        value                      children
==========  =========================  ====================================
int         int                        ()
str         str (decoded content)      ()
atom        name                       ()
var         name                       ()
nil         None                       ()
cons        None                       (head, tail)
tuple       None                       elements
binop       op symbol                  (left, right)
match       None                       (pattern, rhs)
call        name                       args
remote      (module, name)             args
varcall     None                       (callee_var, *args)
fun         param count                (*params, *body)
case        None                       (scrutinee, *clauses)
caseclause  None                       (pattern, *body)
==========  =========================  ====================================

Equality and hashing are structural; spans never participate, so two
occurrences of the same shape compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from clonewright.mel.tokens import Span

EXPR_KINDS = frozenset(
    {
        "int",
        "str",
        "atom",
        "var",
        "nil",
        "cons",
        "tuple",
        "binop",
        "match",
        "call",
        "remote",
        "varcall",
        "fun",
        "case",
        "caseclause",
    }
)

LEAF_KINDS = frozenset({"int", "str", "atom", "var", "nil"})
PATTERN_KINDS = frozenset({"int", "str", "atom", "var", "nil", "cons", "tuple"})
BINOPS = frozenset({"+", "-", "*", "/", "!", "++"})


@dataclass(frozen=True)
class Expr:
    kind: str
    value: object = None
    children: tuple["Expr", ...] = ()
    span: Span = field(compare=False, default=None, repr=False)

    def head(self) -> tuple:
        """Constructor identity used when comparing node shapes."""
        return (self.kind, self.value, len(self.children))

    def walk(self) -> Iterator["Expr"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def fun_params(self) -> tuple["Expr", ...]:
        assert self.kind == "fun"
        return self.children[: self.value]

    def fun_body(self) -> tuple["Expr", ...]:
        assert self.kind == "fun"
        return self.children[self.value :]


@dataclass(frozen=True)
class Clause:
    patterns: tuple[Expr, ...]
    body: tuple[Expr, ...]
    span: Span = field(compare=False, default=None, repr=False)


@dataclass(frozen=True)
class FunDef:
    name: str
    arity: int
    clauses: tuple[Clause, ...]
    span: Span = field(compare=False, default=None, repr=False)

    @property
    def key(self) -> tuple[str, int]:
        return (self.name, self.arity)


@dataclass(frozen=True)
class ModuleAst:
    name: str
    fundefs: tuple[FunDef, ...]
    file: str = field(compare=False, default="<input>")

    def fundef(self, name: str, arity: int) -> FunDef | None:
        for fd in self.fundefs:
            if fd.name == name and fd.arity == arity:
                return fd
        return None


def node_count(node) -> int:
    """AST size metric: every node counts 1, call names are node attributes."""
    if isinstance(node, Expr):
        return 1 + sum(node_count(c) for c in node.children)
    if isinstance(node, (tuple, list)):
        return sum(node_count(c) for c in node)
    raise TypeError(f"cannot size {node!r}")


def walk_exprs(seq) -> Iterator[Expr]:
    for e in seq:
        yield from e.walk()


def cover_span(exprs) -> Span:
    spans = [e.span for e in exprs]
    out = spans[0]
    for s in spans[1:]:
        out = out.cover(s)
    return out
