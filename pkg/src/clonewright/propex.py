"""Turning a clone-derived test function into a property with generators.

The call sites of the function supply observed actual-parameter tuples.
Parameters whose actuals are identical at every site (the environment-style
``Config`` argument and anything like it) are threaded through unchanged;
the rest become data generators: a ``oneof`` over the distinct observed
values, or ``nat()`` once integer literals are generalized.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field

from clonewright.errors import RefactorError
from clonewright.mel.printer import print_expr
from clonewright.mel.syntax import Expr
from clonewright.project import Project


@dataclass
class ActualsInfo:
    module: str
    name: str
    arity: int
    param_names: tuple[str, ...]
    sites: list[tuple[str, object]]  # (file, span) per call, in scan order
    tuples: list[tuple[Expr, ...]]  # kept parameters only, one tuple per site
    kept: tuple[int, ...]  # indexes of generated parameters
    excluded: list[tuple[int, Expr]]  # (index, representative actual)


@dataclass
class Generator:
    kind: str  # oneof | const | nat
    values: list[Expr] = field(default_factory=list)
    params: tuple[str, ...] = ()  # > 1 when correlated parameters merged

    def render(self) -> str:
        if self.kind == "nat":
            return "nat()"
        if self.kind == "const":
            return print_expr(self.values[0])
        return "oneof([" + ", ".join(print_expr(v) for v in self.values) + "])"

    def support(self) -> list[Expr]:
        return list(self.values)


@dataclass
class PropertySketch:
    name: str
    params: tuple[str, ...]
    generators: list[Generator]
    call_text: str
    warnings: list[str] = field(default_factory=list)


def collect_actuals(project: Project, module: str, name: str, arity: int) -> ActualsInfo:
    """Actual parameter tuples at every call site, in call-site order.

    Parameters passed an identical expression at every site are excluded
    from generation and threaded through as-is.
    """
    home = None
    for file in project.files:
        if project.module(file).name == module:
            home = file
            break
    if home is None:
        raise RefactorError(f"no module named {module}")
    fd = project.module(home).fundef(name, arity)
    if fd is None:
        raise RefactorError(f"no function {name}/{arity} in module {module}")
    params = tuple(
        p.value if p.kind == "var" else f"Arg{i + 1}"
        for i, p in enumerate(fd.clauses[0].patterns)
    )
    sites: list[tuple[str, object]] = []
    raw: list[tuple[Expr, ...]] = []
    for file in project.files:
        mod = project.module(file)
        for fdef in mod.fundefs:
            if fdef.name == name and fdef.arity == arity and mod.name == module:
                continue  # not a call site: the definition itself
            for clause in fdef.clauses:
                for root in clause.body:
                    for node in root.walk():
                        if _is_call_to(node, mod.name, module, name, arity):
                            sites.append((file, node.span))
                            raw.append(tuple(node.children))
    if not raw:
        raise RefactorError(f"{module}:{name}/{arity} has no call sites")
    excluded: list[tuple[int, Expr]] = []
    kept: list[int] = []
    for i in range(arity):
        column = [t[i] for t in raw]
        if all(v == column[0] for v in column[1:]):
            excluded.append((i, column[0]))
        else:
            kept.append(i)
    tuples = [tuple(t[i] for i in kept) for t in raw]
    return ActualsInfo(
        module, name, arity, params, sites, tuples, tuple(kept), excluded
    )


def _is_call_to(node: Expr, in_module: str, module: str, name: str, arity: int) -> bool:
    if node.kind == "call":
        return in_module == module and node.value == name and len(node.children) == arity
    if node.kind == "remote":
        return node.value == (module, name) and len(node.children) == arity
    return False


def synthesize_generators(
    tuples: list[tuple[Expr, ...]],
    generalize_literals: bool = False,
    param_names: tuple[str, ...] = (),
) -> tuple[list[Generator], list[str]]:
    """One generator per parameter position (or merged position group)."""
    if not tuples:
        raise RefactorError("no observed actuals")
    width = len(tuples[0])
    names = param_names or tuple(f"P{i + 1}" for i in range(width))
    groups = _correlated_groups(tuples, width)
    generators: list[Generator] = []
    warnings: list[str] = []
    for group in groups:
        observed: list[Expr] = []
        for t in tuples:
            if len(group) == 1:
                value = t[group[0]]
            else:
                value = Expr("tuple", None, tuple(t[i] for i in group))
            if value not in observed:
                observed.append(value)
        warnings.extend(_near_identical_strings(observed))
        if generalize_literals:
            if all(v.kind == "int" for v in observed):
                generators.append(
                    Generator("nat", params=tuple(names[i] for i in group))
                )
                continue
            transformed: list[Expr] = []
            for v in observed:
                nv = _nat_literals(v)
                if nv not in transformed:
                    transformed.append(nv)
            observed = transformed
        kind = "const" if len(observed) == 1 else "oneof"
        generators.append(
            Generator(kind, observed, tuple(names[i] for i in group))
        )
    return generators, warnings


def _correlated_groups(tuples, width: int) -> list[tuple[int, ...]]:
    """Merge positions whose values determine each other with repeat evidence."""
    parent = list(range(width))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(width):
        for j in range(i + 1, width):
            pairs = [(t[i], t[j]) for t in tuples]
            distinct = []
            for p in pairs:
                if p not in distinct:
                    distinct.append(p)
            forwards = {}
            backwards = {}
            bijective = True
            for a, b in distinct:
                if forwards.setdefault(_key(a), _key(b)) != _key(b):
                    bijective = False
                if backwards.setdefault(_key(b), _key(a)) != _key(a):
                    bijective = False
            if bijective and len(pairs) > len(distinct):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(width):
        groups.setdefault(find(i), []).append(i)
    return [tuple(sorted(g)) for g in sorted(groups.values(), key=lambda g: min(g))]


def _key(expr: Expr) -> str:
    return print_expr(expr)


def _nat_literals(expr: Expr) -> Expr:
    if expr.kind == "int":
        return Expr("call", "nat", (), expr.span)
    return Expr(
        expr.kind,
        expr.value,
        tuple(_nat_literals(c) for c in expr.children),
        expr.span,
    )


def _near_identical_strings(values: list[Expr]) -> list[str]:
    out = []
    strings = [v.value for v in values if v.kind == "str" and len(v.value) >= 5]
    for i in range(len(strings)):
        for j in range(i + 1, len(strings)):
            ratio = difflib.SequenceMatcher(None, strings[i], strings[j]).ratio()
            if ratio >= 0.9:
                out.append(
                    f"alternatives {strings[i]!r} and {strings[j]!r} are nearly "
                    "identical; a corrupted copy would widen the generator"
                )
    return out


def emit_property(info: ActualsInfo, generators: list[Generator], warnings=None) -> PropertySketch:
    """Render the FORALL property over the synthesized generators."""
    bindings: list[str] = []
    for gen in generators:
        if len(gen.params) == 1:
            bindings.append(gen.params[0])
        else:
            bindings.append("{" + ", ".join(gen.params) + "}")
    arg_texts: list[str] = []
    kept_set = set(info.kept)
    excluded = dict(info.excluded)
    for i in range(info.arity):
        if i in kept_set:
            arg_texts.append(info.param_names[i])
        else:
            arg_texts.append(print_expr(excluded[i]))
    call = f"{info.name}(" + ", ".join(arg_texts) + ")"
    sketch = PropertySketch(
        f"prop_{info.name}",
        tuple(info.param_names[i] for i in info.kept),
        generators,
        call,
        list(warnings or []),
    )
    return sketch


def render_property(sketch: PropertySketch) -> str:
    if not sketch.generators:
        return f"{sketch.name}() -> {sketch.call_text}.\n"
    bindings = []
    for gen in sketch.generators:
        if len(gen.params) == 1:
            bindings.append(gen.params[0])
        else:
            bindings.append("{" + ", ".join(gen.params) + "}")
    binding = "{" + ", ".join(bindings) + "}"
    gens = ",\n     ".join(gen.render() for gen in sketch.generators)
    return (
        f"{sketch.name}() ->\n"
        f"  FORALL({binding},\n"
        f"    {{{gens}}},\n"
        f"    {sketch.call_text}).\n"
    )


def extract_property(
    project: Project,
    module: str,
    name: str,
    arity: int,
    generalize_literals: bool = False,
) -> tuple[PropertySketch, str]:
    info = collect_actuals(project, module, name, arity)
    generators, warnings = synthesize_generators(
        info.tuples,
        generalize_literals,
        tuple(info.param_names[i] for i in info.kept),
    )
    sketch = emit_property(info, generators, warnings)
    return sketch, render_property(sketch)


def property_file_name(module: str) -> str:
    return f"{module}_props.mel.txt"
