"""Static binding analysis: link every variable occurrence to its binder.

Mel is single-assignment per clause scope. The first occurrence of a
variable in a pattern (clause head, match left side, case-clause pattern)
defines it; later occurrences are uses. A bound variable occurring again in
a pattern is a rebinding, reported as a warning. A use with no preceding
definition in the clause is an error ("free in function").

``fun`` parameters and ``case`` clause patterns open nested scopes; their
bindings do not escape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from clonewright.mel.syntax import Clause, Expr, FunDef, ModuleAst
from clonewright.mel.tokens import Span


@dataclass(frozen=True)
class Occurrence:
    name: str
    span: Span
    role: str  # def | use | rebind | free
    binder: Span | None
    clause_key: tuple[int, int] | None = None


@dataclass
class BindingIssue:
    kind: str
    message: str
    span: Span


@dataclass
class BindingInfo:
    occurrences: list[Occurrence] = field(default_factory=list)
    by_span: dict[Span, Occurrence] = field(default_factory=dict)
    groups: dict[Span, list[Occurrence]] = field(default_factory=dict)
    errors: list[BindingIssue] = field(default_factory=list)
    warnings: list[BindingIssue] = field(default_factory=list)

    def add(self, occ: Occurrence) -> None:
        self.occurrences.append(occ)
        self.by_span[occ.span] = occ
        if occ.binder is not None:
            self.groups.setdefault(occ.binder, []).append(occ)

    def binder_of(self, span: Span) -> Span | None:
        occ = self.by_span.get(span)
        return occ.binder if occ is not None else None

    def group_of(self, span: Span) -> list[Occurrence]:
        binder = self.binder_of(span)
        return self.groups.get(binder, []) if binder is not None else []


class _Walker:
    def __init__(self, info: BindingInfo, clause_key: tuple[int, int] | None):
        self.info = info
        self.clause_key = clause_key

    def pattern(self, e: Expr, env: dict[str, Span]) -> None:
        if e.kind == "var":
            if e.value in env:
                occ = Occurrence(e.value, e.span, "rebind", env[e.value], self.clause_key)
                self.info.add(occ)
                self.info.warnings.append(
                    BindingIssue(
                        "rebinding",
                        f"variable {e.value} is already bound and is matched, not rebound",
                        e.span,
                    )
                )
            else:
                env[e.value] = e.span
                self.info.add(Occurrence(e.value, e.span, "def", e.span, self.clause_key))
            return
        for c in e.children:
            self.pattern(c, env)

    def expr(self, e: Expr, env: dict[str, Span]) -> None:
        k = e.kind
        if k == "var":
            if e.value in env:
                self.info.add(Occurrence(e.value, e.span, "use", env[e.value], self.clause_key))
            else:
                self.info.add(Occurrence(e.value, e.span, "free", None, self.clause_key))
                self.info.errors.append(
                    BindingIssue(
                        "use-before-definition",
                        f"variable {e.value} is used before any definition",
                        e.span,
                    )
                )
            return
        if k == "match":
            pattern, rhs = e.children
            self.expr(rhs, env)
            self.pattern(pattern, env)
            return
        if k == "fun":
            inner = dict(env)
            for p in e.fun_params():
                if p.kind == "var" and p.value in inner:
                    del inner[p.value]
                    self.info.warnings.append(
                        BindingIssue(
                            "shadowing",
                            f"fun parameter {p.value} shadows an outer binding",
                            p.span,
                        )
                    )
                self.pattern(p, inner)
            for b in e.fun_body():
                self.expr(b, inner)
            return
        if k == "case":
            self.expr(e.children[0], env)
            for clause in e.children[1:]:
                inner = dict(env)
                self.pattern(clause.children[0], inner)
                for b in clause.children[1:]:
                    self.expr(b, inner)
            return
        for c in e.children:
            self.expr(c, env)


def annotate_bindings(module: ModuleAst) -> BindingInfo:
    """Classify every variable occurrence in the module."""
    info = BindingInfo()
    for fi, fd in enumerate(module.fundefs):
        for ci, clause in enumerate(fd.clauses):
            walker = _Walker(info, (fi, ci))
            env: dict[str, Span] = {}
            for p in clause.patterns:
                walker.pattern(p, env)
            for e in clause.body:
                walker.expr(e, env)
    return info


def annotate_fragment(exprs) -> BindingInfo:
    """Binding analysis of a bare expression sequence.

    Variables with no definition inside the fragment are classified free
    (without recording errors); used by anti-unification when no enclosing
    module context is available.
    """
    info = BindingInfo()
    walker = _Walker(info, None)
    env: dict[str, Span] = {}
    for e in exprs:
        walker.expr(e, env)
    info.errors.clear()
    return info


def clause_of(module: ModuleAst, key: tuple[int, int]) -> Clause:
    fi, ci = key
    return module.fundefs[fi].clauses[ci]


def fundef_of(module: ModuleAst, key: tuple[int, int]) -> FunDef:
    return module.fundefs[key[0]]
