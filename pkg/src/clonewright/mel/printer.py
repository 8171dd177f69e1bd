"""Deterministic pretty-printer for Mel.

The layout is normative: two-space indentation, one expression per line in
multi-expression clause bodies, single-expression clauses inline. Printing
is idempotent over parse/print cycles.
"""

from __future__ import annotations

from clonewright.mel.syntax import Clause, Expr, FunDef, ModuleAst
from clonewright.mel.tokens import string_lexeme

_RIGHT_PREC = {"=": 10, "!": 20, "++": 30}
_LEFT_PREC = {"+": 40, "-": 40, "*": 50, "/": 50}


def _prec(e: Expr) -> int:
    if e.kind == "match":
        return 10
    if e.kind == "binop":
        return _RIGHT_PREC.get(e.value, 0) or _LEFT_PREC[e.value]
    return 100


def print_expr(e: Expr, need: int = 0) -> str:
    text = _render(e)
    if _prec(e) < need:
        return f"({text})"
    return text


def _render(e: Expr) -> str:
    k = e.kind
    if k == "int":
        return str(e.value)
    if k == "str":
        return string_lexeme(e.value)
    if k in ("atom", "var"):
        return e.value
    if k == "nil":
        return "[]"
    if k == "cons":
        elems = []
        node = e
        while node.kind == "cons":
            elems.append(print_expr(node.children[0]))
            node = node.children[1]
        if node.kind == "nil":
            return "[" + ", ".join(elems) + "]"
        return "[" + ", ".join(elems) + "|" + print_expr(node) + "]"
    if k == "tuple":
        return "{" + ", ".join(print_expr(c) for c in e.children) + "}"
    if k == "binop":
        op = e.value
        if op in _RIGHT_PREC:
            bp = _RIGHT_PREC[op]
            lhs = print_expr(e.children[0], bp + 1)
            rhs = print_expr(e.children[1], bp)
        else:
            bp = _LEFT_PREC[op]
            lhs = print_expr(e.children[0], bp)
            rhs = print_expr(e.children[1], bp + 1)
        return f"{lhs} {op} {rhs}"
    if k == "match":
        pat = print_expr(e.children[0])
        rhs = print_expr(e.children[1], 10)
        return f"{pat} = {rhs}"
    if k == "call":
        return f"{e.value}(" + ", ".join(print_expr(c) for c in e.children) + ")"
    if k == "remote":
        mod, name = e.value
        return f"{mod}:{name}(" + ", ".join(print_expr(c) for c in e.children) + ")"
    if k == "varcall":
        callee = print_expr(e.children[0], 100)
        return f"{callee}(" + ", ".join(print_expr(c) for c in e.children[1:]) + ")"
    if k == "fun":
        params = ", ".join(print_expr(p) for p in e.fun_params())
        body = ", ".join(print_expr(b) for b in e.fun_body())
        return f"fun({params}) -> {body} end"
    if k == "case":
        scrutinee = print_expr(e.children[0])
        clauses = "; ".join(_render_case_clause(c) for c in e.children[1:])
        return f"case {scrutinee} of {clauses} end"
    if k == "caseclause":
        return _render_case_clause(e)
    raise ValueError(f"unknown expr kind {k!r}")


def _render_case_clause(c: Expr) -> str:
    pattern = print_expr(c.children[0])
    body = ", ".join(print_expr(b) for b in c.children[1:])
    return f"{pattern} -> {body}"


def _clause_lines(name: str, clause: Clause) -> list[str]:
    head = f"{name}(" + ", ".join(print_expr(p) for p in clause.patterns) + ") ->"
    if len(clause.body) == 1:
        return [f"{head} {print_expr(clause.body[0])}"]
    lines = [head]
    for i, e in enumerate(clause.body):
        sep = "," if i < len(clause.body) - 1 else ""
        lines.append(f"  {print_expr(e)}{sep}")
    return lines


def print_fundef(fd: FunDef) -> str:
    chunks = []
    for i, clause in enumerate(fd.clauses):
        lines = _clause_lines(fd.name, clause)
        terminator = ";" if i < len(fd.clauses) - 1 else "."
        lines[-1] += terminator
        chunks.append("\n".join(lines))
    return "\n".join(chunks)


def print_module(m: ModuleAst) -> str:
    parts = [f"-module({m.name})."]
    for fd in m.fundefs:
        parts.append("")
        parts.append(print_fundef(fd))
    return "\n".join(parts) + "\n"
