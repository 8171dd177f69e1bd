"""Shared construction helpers for tests."""

from __future__ import annotations

from clonewright.antiunify import InstanceContext
from clonewright.mel import annotate_bindings, parse_module
from clonewright.mel.syntax import cover_span


def module_context(
    src: str,
    file: str = "m.mel",
    fundef: int = 0,
    clause: int = 0,
    lo: int = 0,
    hi: int | None = None,
) -> InstanceContext:
    """Instance context for a body expression range of a parsed module."""
    m = parse_module(src, file)
    info = annotate_bindings(m)
    body = m.fundefs[fundef].clauses[clause].body
    exprs = body[lo : hi if hi is not None else len(body)]
    return InstanceContext(tuple(exprs), info, cover_span(exprs), m.name)


def body_contexts(src: str, file: str = "m.mel", fundefs=None) -> list[InstanceContext]:
    """One context per function body (whole body each) of a module."""
    m = parse_module(src, file)
    info = annotate_bindings(m)
    out = []
    for fi, fd in enumerate(m.fundefs):
        if fundefs is not None and fi not in fundefs:
            continue
        body = fd.clauses[0].body
        out.append(InstanceContext(body, info, cover_span(body), m.name))
    return out
