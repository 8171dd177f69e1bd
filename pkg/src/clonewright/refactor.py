"""Clone elimination and supporting refactorings.

Every refactoring consumes a project snapshot and produces new file texts
plus per-instance outcomes; nothing is written here. All edited files are
re-printed with the normative printer. A skipped instance leaves its file
bytes untouched in the affected span; applying is atomic and refuses to
start when any target file is read-only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from clonewright.antiunify import Template
from clonewright.errors import RefactorError
from clonewright.mel.bindings import Occurrence
from clonewright.mel.printer import print_module
from clonewright.mel.syntax import Clause, Expr, FunDef, ModuleAst
from clonewright.mel.tokens import Span
from clonewright.project import InstanceRef, Project


# -- effects -----------------------------------------------------------------


@dataclass
class EffectTable:
    """Coarse purity classification for calls; unknowns are effectful."""

    entries: dict[tuple[str, str, int], str] = field(default_factory=dict)

    @classmethod
    def default(cls) -> "EffectTable":
        return cls()

    def with_pure(self, *keys: tuple[str, str, int]) -> "EffectTable":
        table = EffectTable(dict(self.entries))
        for key in keys:
            table.entries[key] = "pure"
        return table

    def call_effectful(self, module: str | None, name: str, arity: int) -> bool:
        return self.entries.get((module, name, arity)) != "pure"


def expr_effectful(expr: Expr, table: EffectTable, module: str | None) -> bool:
    k = expr.kind
    if k in ("int", "str", "atom", "var", "nil"):
        return False
    if k == "fun":
        return False  # building a closure defers any effect
    if k == "binop":
        if expr.value == "!":
            return True
        return any(expr_effectful(c, table, module) for c in expr.children)
    if k in ("cons", "tuple", "match", "case", "caseclause"):
        return any(expr_effectful(c, table, module) for c in expr.children)
    if k == "call":
        if table.call_effectful(module, expr.value, len(expr.children)):
            return True
        return any(expr_effectful(c, table, module) for c in expr.children)
    if k == "remote":
        mod, name = expr.value
        if table.call_effectful(mod, name, len(expr.children)):
            return True
        return any(expr_effectful(c, table, module) for c in expr.children)
    if k == "varcall":
        return True
    raise RefactorError(f"cannot classify effects of {k}")


# -- results -------------------------------------------------------------------


@dataclass
class InstanceOutcome:
    ref: InstanceRef
    applied: bool
    reason: str = ""


@dataclass
class RefactorResult:
    changed: dict[str, str] = field(default_factory=dict)
    outcomes: list[InstanceOutcome] = field(default_factory=list)

    @property
    def applied_count(self) -> int:
        return sum(1 for o in self.outcomes if o.applied)


def apply_result(result: RefactorResult, root: str | Path = ".") -> list[str]:
    """Write changed files atomically; abort before any write if one is read-only."""
    import stat as stat_module

    root = Path(root)
    targets = {file: root / file for file in result.changed}
    for file, path in targets.items():
        if not path.exists():
            continue
        mode = path.stat().st_mode
        # Mode bits, not os.access: root can write anything, but a cleared
        # write bit still signals a checked-out read-only file.
        if not mode & stat_module.S_IWUSR or not os.access(path, os.W_OK):
            raise RefactorError(f"file is not writable: {file}")
    for file, path in targets.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(result.changed[file], encoding="utf-8")
        tmp.replace(path)
    return sorted(targets)


# -- AST edit helpers ------------------------------------------------------------


def _replace_body(module: ModuleAst, clause_key, lo, hi, new_exprs) -> ModuleAst:
    fi, ci = clause_key
    fundefs = list(module.fundefs)
    fd = fundefs[fi]
    clauses = list(fd.clauses)
    clause = clauses[ci]
    body = clause.body[:lo] + tuple(new_exprs) + clause.body[hi:]
    clauses[ci] = Clause(clause.patterns, body, clause.span)
    fundefs[fi] = FunDef(fd.name, fd.arity, tuple(clauses), fd.span)
    return ModuleAst(module.name, tuple(fundefs), module.file)


def _insert_fundef(module: ModuleAst, index: int, fd: FunDef) -> ModuleAst:
    fundefs = list(module.fundefs)
    fundefs.insert(index, fd)
    return ModuleAst(module.name, tuple(fundefs), module.file)


def _module_file(project: Project, module_name: str) -> str:
    matches = [f for f in project.files if project.module(f).name == module_name]
    if not matches:
        raise RefactorError(f"no module named {module_name}")
    if len(matches) > 1:
        raise RefactorError(f"module {module_name} is defined in multiple files")
    return matches[0]


def _find_fundef(module: ModuleAst, name: str, arity: int) -> int:
    for i, fd in enumerate(module.fundefs):
        if fd.name == name and fd.arity == arity:
            return i
    raise RefactorError(f"no function {name}/{arity} in module {module.name}")


def _clause_var_names(clause: Clause) -> set[str]:
    names: set[str] = set()
    for root in (*clause.patterns, *clause.body):
        for node in root.walk():
            if node.kind == "var":
                names.add(node.value)
    return names


def _rename_vars(expr: Expr, mapping: dict[str, str]) -> Expr:
    if expr.kind == "var":
        return Expr("var", mapping.get(expr.value, expr.value), (), expr.span)
    return Expr(
        expr.kind,
        expr.value,
        tuple(_rename_vars(c, mapping) for c in expr.children),
        expr.span,
    )


# -- generalise -------------------------------------------------------------------


def generalise(project: Project, clone_class, table: EffectTable | None = None) -> FunDef:
    """The clone class as a function definition named new_fun.

    Parameters are the free variables in declaration order, then the
    placeholders. A placeholder whose actual can have a side effect in any
    instance becomes a closure parameter, called as ``P()`` in the body;
    escaping bindings are returned as a final variable or tuple.
    """
    table = table or EffectTable.default()
    template: Template = clone_class.template
    closure_params = set()
    for param in template.new_params:
        for inst in clone_class.instances:
            module = project.module(inst.ref.file).name
            if expr_effectful(inst.substitution[param], table, module):
                closure_params.add(param)
                break
    body = tuple(
        _wrap_closure_uses(e, closure_params) for e in template.body
    )
    if template.exports:
        if len(template.exports) == 1:
            body = body + (Expr("var", template.exports[0]),)
        else:
            body = body + (
                Expr("tuple", None, tuple(Expr("var", x) for x in template.exports)),
            )
    params = tuple(Expr("var", p) for p in template.params)
    return FunDef("new_fun", len(params), (Clause(params, body, None),), None)


def _wrap_closure_uses(expr: Expr, closure_params: set[str]) -> Expr:
    if expr.kind == "var" and expr.value in closure_params:
        return Expr("varcall", None, (Expr("var", expr.value, (), expr.span),), expr.span)
    return Expr(
        expr.kind,
        expr.value,
        tuple(_wrap_closure_uses(c, closure_params) for c in expr.children),
        expr.span,
    )


# -- fold ----------------------------------------------------------------------


@dataclass
class _FoldTarget:
    module_name: str
    file: str
    fundef_index: int
    fd: FunDef
    params: tuple[str, ...]
    closure_params: set[str]
    core_body: tuple[Expr, ...]
    exports: tuple[str, ...]  # target-side binder names, in tuple order


def _analyze_target(project: Project, module_name: str, name: str, arity: int) -> _FoldTarget:
    file = _module_file(project, module_name)
    module = project.module(file)
    fi = _find_fundef(module, name, arity)
    fd = module.fundefs[fi]
    if len(fd.clauses) != 1:
        raise RefactorError(f"{name}/{arity} has multiple clauses and cannot be folded against")
    clause = fd.clauses[0]
    if not all(p.kind == "var" for p in clause.patterns):
        raise RefactorError(f"{name}/{arity} has non-variable parameters")
    params = tuple(p.value for p in clause.patterns)
    body = clause.body
    exports: tuple[str, ...] = ()
    core = body
    if len(body) >= 2:
        tail = body[-1]
        binders = _body_binders(body[:-1])
        if tail.kind == "var" and tail.value in binders:
            exports = (tail.value,)
            core = body[:-1]
        elif tail.kind == "tuple" and tail.children and all(
            c.kind == "var" and c.value in binders for c in tail.children
        ):
            exports = tuple(c.value for c in tail.children)
            core = body[:-1]
    closure_params = set()
    for p in params:
        uses = _param_uses(core, p)
        if uses and all(u == "closure" for u in uses):
            closure_params.add(p)
    return _FoldTarget(module_name, file, fi, fd, params, closure_params, core, exports)


def _body_binders(body) -> set[str]:
    out: set[str] = set()

    def walk_pattern(e: Expr):
        if e.kind == "var":
            out.add(e.value)
            return
        for c in e.children:
            walk_pattern(c)

    def walk(e: Expr):
        if e.kind == "match":
            walk(e.children[1])
            walk_pattern(e.children[0])
            return
        # bindings inside fun/case do not escape
        if e.kind in ("fun", "case", "caseclause"):
            return
        for c in e.children:
            walk(c)

    for e in body:
        walk(e)
    return out


def _param_uses(body, param: str) -> list[str]:
    uses: list[str] = []

    def walk(e: Expr):
        if (
            e.kind == "varcall"
            and e.children[0].value == param
            and len(e.children) == 1
        ):
            uses.append("closure")
            return
        if e.kind == "var" and e.value == param:
            uses.append("plain")
            return
        for c in e.children:
            walk(c)

    for e in body:
        walk(e)
    return uses


class _MatchFail(Exception):
    pass


def _match_instance(project, target: _FoldTarget, ref: InstanceRef):
    """Match the target body against a site; return captures or None."""
    site_exprs = project.exprs(ref)
    site_module = project.module(ref.file).name
    captures: dict[str, Expr] = {}
    env: dict[str, str] = {}  # target-local binder -> site binder name

    def match(te: Expr, ie: Expr, in_pattern: bool):
        if (
            te.kind == "varcall"
            and len(te.children) == 1
            and te.children[0].value in target.closure_params
        ):
            capture(te.children[0].value, ie)
            return
        if te.kind == "var":
            name = te.value
            if name in env:
                if ie.kind != "var" or ie.value != env[name]:
                    raise _MatchFail
                return
            if name in target.params:
                if in_pattern:
                    if ie.kind != "var":
                        raise _MatchFail
                capture(name, ie)
                return
            if in_pattern:
                if ie.kind != "var":
                    raise _MatchFail
                env[name] = ie.value
                return
            raise _MatchFail  # unbound non-parameter variable cannot occur
        if te.kind in ("call", "remote"):
            # A local call in the target's module matches the equivalent
            # remote call at the site and vice versa.
            if ie.kind not in ("call", "remote") or len(te.children) != len(ie.children):
                raise _MatchFail
            if _resolve(target.module_name, te) != _resolve(site_module, ie):
                raise _MatchFail
            for tc, ic in zip(te.children, ie.children):
                match(tc, ic, in_pattern)
            return
        if ie.kind != te.kind or len(te.children) != len(ie.children):
            raise _MatchFail
        if te.value != ie.value:
            raise _MatchFail
        if te.kind == "match":
            match(te.children[1], ie.children[1], False)
            match(te.children[0], ie.children[0], True)
            return
        if te.kind == "fun":
            np = te.value
            for tp, ip in zip(te.children[:np], ie.children[:np]):
                match(tp, ip, True)
            for tb, ib in zip(te.children[np:], ie.children[np:]):
                match(tb, ib, False)
            return
        if te.kind == "caseclause":
            match(te.children[0], ie.children[0], True)
            for tb, ib in zip(te.children[1:], ie.children[1:]):
                match(tb, ib, False)
            return
        for tc, ic in zip(te.children, ie.children):
            match(tc, ic, in_pattern)

    def capture(param: str, node: Expr):
        if param in captures:
            if captures[param] != node:
                raise _MatchFail
        else:
            captures[param] = node

    if len(site_exprs) != len(target.core_body):
        return None
    try:
        for te, ie in zip(target.core_body, site_exprs):
            match(te, ie, False)
    except _MatchFail:
        return None
    return captures, env


def _resolve(module: str, call: Expr) -> tuple:
    if call.kind == "call":
        return ("call", (module, call.value), len(call.children))
    return ("call", call.value, len(call.children))


def fold_instances(project: Project, target: _FoldTarget) -> list[InstanceRef]:
    """All sites whose code is an instance of the target's body template."""
    out = []
    length = len(target.core_body)
    for file in project.files:
        unit = project.unit(file)
        for fi, fd in enumerate(unit.module.fundefs):
            if file == target.file and fi == target.fundef_index:
                continue  # never fold the definition against itself
            for ci, clause in enumerate(fd.clauses):
                for lo in range(0, len(clause.body) - length + 1):
                    ref = InstanceRef(file, (fi, ci), lo, lo + length)
                    if _match_instance(project, target, ref) is not None:
                        out.append(ref)
    return out


def fold(
    project: Project,
    module_name: str,
    name: str,
    arity: int,
    selection: list[InstanceRef] | None = None,
) -> RefactorResult:
    """Replace instances of the target's body by calls to it."""
    target = _analyze_target(project, module_name, name, arity)
    instances = fold_instances(project, target)
    if selection is not None:
        unknown = [r for r in selection if r not in instances]
        if unknown:
            raise RefactorError(
                f"selection is not an instance of {name}/{arity}: {unknown[0]}"
            )
        instances = [r for r in instances if r in selection]
    result = RefactorResult()
    per_file: dict[str, list[tuple[InstanceRef, Expr]]] = {}
    applied_spans: list[tuple[str, Span]] = []
    for ref in sorted(instances, key=InstanceRef.sort_key):
        outcome, replacement = _fold_one(project, target, ref, applied_spans)
        result.outcomes.append(outcome)
        if outcome.applied:
            per_file.setdefault(ref.file, []).append((ref, replacement))
            applied_spans.append((ref.file, project.span(ref)))
    for file, edits in per_file.items():
        module = project.module(file)
        for ref, replacement in sorted(
            edits, key=lambda e: (e[0].clause_key, -e[0].lo)
        ):
            module = _replace_body(module, ref.clause_key, ref.lo, ref.hi, [replacement])
        result.changed[file] = print_module(module)
    return result


def _fold_one(project, target: _FoldTarget, ref: InstanceRef, applied_spans):
    span = project.span(ref)
    for file, other in applied_spans:
        if file == ref.file and span.overlaps(other):
            return InstanceOutcome(ref, False, "overlaps an already-folded instance"), None
    matched = _match_instance(project, target, ref)
    if matched is None:
        return InstanceOutcome(ref, False, "no longer matches the target body"), None
    captures, env = matched
    unit = project.unit(ref.file)
    extent = span

    # (a) actual parameters must be evaluable before the instance
    for param in target.params:
        node = captures.get(param)
        if node is None:
            return (
                InstanceOutcome(ref, False, f"parameter {param} has no binding site"),
                None,
            )
        for sub in node.walk():
            if sub.kind != "var":
                continue
            occ = unit.bindings.by_span.get(sub.span)
            if occ is not None and occ.binder is not None and extent.contains(occ.binder):
                return (
                    InstanceOutcome(
                        ref,
                        False,
                        f"actual for {param} uses {sub.value}, bound inside the instance",
                    ),
                    None,
                )

    # (b) the escaping bindings at the site must equal the target's exports
    site_escapes = _site_escapes(project, ref)
    expected = []
    for name in target.exports:
        site_name = env.get(name)
        if site_name is None:
            return (
                InstanceOutcome(ref, False, f"exported variable {name} not bound here"),
                None,
            )
        expected.append(site_name)
    if set(site_escapes) != set(expected):
        return (
            InstanceOutcome(
                ref,
                False,
                "exported variables differ: site needs "
                f"{sorted(site_escapes)} but target returns {sorted(expected)}",
            ),
            None,
        )

    site_module = project.module(ref.file).name
    args = []
    for param in target.params:
        actual = captures[param]
        if param in target.closure_params:
            actual = Expr("fun", 0, (actual,))
        args.append(actual)
    if site_module == target.module_name:
        call = Expr("call", target.fd.name, tuple(args))
    else:
        call = Expr("remote", (target.module_name, target.fd.name), tuple(args))
    if expected:
        if len(expected) == 1:
            pattern = Expr("var", expected[0])
        else:
            pattern = Expr("tuple", None, tuple(Expr("var", n) for n in expected))
        replacement = Expr("match", None, (pattern, call))
    else:
        replacement = call
    return InstanceOutcome(ref, True), replacement


def _site_escapes(project: Project, ref: InstanceRef) -> list[str]:
    """Names bound inside the instance and used after it, in binder order."""
    unit = project.unit(ref.file)
    extent = project.span(ref)
    escapes: list[str] = []
    for occ in unit.bindings.occurrences:
        if occ.role != "def" or not extent.contains(occ.span):
            continue
        group = unit.bindings.groups.get(occ.binder, [])
        if any(o.span.start >= extent.end for o in group if o.role != "def"):
            if occ.name not in escapes:
                escapes.append(occ.name)
    return escapes


# -- renamings -------------------------------------------------------------------


def rename_function(
    project: Project, module_name: str, name: str, arity: int, new_name: str
) -> RefactorResult:
    if new_name == name:
        return RefactorResult()
    file = _module_file(project, module_name)
    module = project.module(file)
    _find_fundef(module, name, arity)
    if module.fundef(new_name, arity) is not None:
        raise RefactorError(f"module {module_name} already defines {new_name}/{arity}")
    result = RefactorResult()
    for f in project.files:
        mod = project.module(f)
        renamed = _rename_calls(mod, module_name, name, arity, new_name, f == file)
        if renamed != mod:
            result.changed[f] = print_module(renamed)
    return result


def _rename_calls(
    module: ModuleAst, target_module: str, name: str, arity: int, new_name: str, is_home: bool
) -> ModuleAst:
    def rewrite(e: Expr) -> Expr:
        children = tuple(rewrite(c) for c in e.children)
        if (
            e.kind == "call"
            and is_home
            and e.value == name
            and len(children) == arity
        ):
            return Expr("call", new_name, children, e.span)
        if (
            e.kind == "remote"
            and e.value == (target_module, name)
            and len(children) == arity
        ):
            return Expr("remote", (target_module, new_name), children, e.span)
        return Expr(e.kind, e.value, children, e.span)

    fundefs = []
    for fd in module.fundefs:
        clauses = tuple(
            Clause(c.patterns, tuple(rewrite(b) for b in c.body), c.span)
            for c in fd.clauses
        )
        fd_name = fd.name
        if is_home and fd.name == name and fd.arity == arity:
            fd_name = new_name
        fundefs.append(FunDef(fd_name, fd.arity, clauses, fd.span))
    return ModuleAst(module.name, tuple(fundefs), module.file)


def locate_occurrence(project: Project, file: str, line: int, col: int) -> Occurrence:
    unit = project.unit(file)
    hits = [
        occ
        for occ in unit.bindings.occurrences
        if occ.span.contains_point(line, col)
    ]
    if not hits:
        raise RefactorError(f"no variable at {file}:{line}.{col}")
    return hits[0]


def rename_variable(
    project: Project, file: str, line: int, col: int, new_name: str
) -> RefactorResult:
    occ = locate_occurrence(project, file, line, col)
    if occ.role != "def":
        raise RefactorError(f"{occ.name} at {line}.{col} is not a defining occurrence")
    if new_name == occ.name:
        return RefactorResult()
    if not (new_name[:1].isupper() and new_name.isidentifier()):
        raise RefactorError(f"{new_name!r} is not a valid variable name")
    unit = project.unit(file)
    fi, ci = occ.clause_key
    clause = unit.module.fundefs[fi].clauses[ci]
    if new_name in _clause_var_names(clause):
        raise RefactorError(
            f"{new_name} is already bound or used in the enclosing clause"
        )
    spans = {o.span for o in unit.bindings.groups.get(occ.binder, [])}

    def rewrite(e: Expr) -> Expr:
        if e.kind == "var" and e.span in spans:
            return Expr("var", new_name, (), e.span)
        return Expr(e.kind, e.value, tuple(rewrite(c) for c in e.children), e.span)

    patterns = tuple(rewrite(p) for p in clause.patterns)
    body = tuple(rewrite(b) for b in clause.body)
    fundefs = list(unit.module.fundefs)
    clauses = list(fundefs[fi].clauses)
    clauses[ci] = Clause(patterns, body, clause.span)
    fundefs[fi] = FunDef(fundefs[fi].name, fundefs[fi].arity, tuple(clauses), fundefs[fi].span)
    module = ModuleAst(unit.module.name, tuple(fundefs), unit.module.file)
    return RefactorResult(changed={file: print_module(module)})


def swap_arguments(
    project: Project, module_name: str, name: str, arity: int, i: int, j: int
) -> RefactorResult:
    if not (1 <= i <= arity and 1 <= j <= arity):
        raise RefactorError(f"positions must be within 1..{arity}")
    file = _module_file(project, module_name)
    _find_fundef(project.module(file), name, arity)
    if i == j:
        return RefactorResult()

    def swap(items: tuple) -> tuple:
        out = list(items)
        out[i - 1], out[j - 1] = out[j - 1], out[i - 1]
        return tuple(out)

    result = RefactorResult()
    for f in project.files:
        mod = project.module(f)
        is_home = f == file

        def rewrite(e: Expr) -> Expr:
            children = tuple(rewrite(c) for c in e.children)
            if e.kind == "call" and is_home and e.value == name and len(children) == arity:
                return Expr("call", name, swap(children), e.span)
            if e.kind == "remote" and e.value == (module_name, name) and len(children) == arity:
                return Expr("remote", e.value, swap(children), e.span)
            return Expr(e.kind, e.value, children, e.span)

        fundefs = []
        for fd in mod.fundefs:
            clauses = []
            for c in fd.clauses:
                patterns = c.patterns
                if is_home and fd.name == name and fd.arity == arity:
                    patterns = swap(patterns)
                clauses.append(
                    Clause(patterns, tuple(rewrite(b) for b in c.body), c.span)
                )
            fundefs.append(FunDef(fd.name, fd.arity, tuple(clauses), fd.span))
        renamed = ModuleAst(mod.name, tuple(fundefs), mod.file)
        if renamed != mod:
            result.changed[f] = print_module(renamed)
    return result


# -- inline ---------------------------------------------------------------------


def inline(project: Project, file: str, line: int, col: int) -> RefactorResult:
    """Replace a call by the callee's body with parameters substituted."""
    unit = project.unit(file)
    site = _locate_call_site(unit.module, line, col)
    if site is None:
        raise RefactorError(
            f"no inlinable call at {file}:{line}.{col} "
            "(must be a top-level expression or the right side of a match)"
        )
    clause_key, index, pattern, call = site
    if call.kind == "call":
        callee_module = unit.module.name
    else:
        callee_module = call.value[0]
    callee_name = call.value if call.kind == "call" else call.value[1]
    callee_file = _module_file(project, callee_module)
    callee_mod = project.module(callee_file)
    fd = callee_mod.fundef(callee_name, len(call.children))
    if fd is None:
        raise RefactorError(
            f"unknown function {callee_module}:{callee_name}/{len(call.children)}"
        )
    if len(fd.clauses) != 1:
        raise RefactorError(f"{callee_name} has multiple clauses; cannot inline")
    callee_clause = fd.clauses[0]

    site_clause = project.clause(file, clause_key)
    taken = _clause_var_names(site_clause)
    exports = _distributable_exports(callee_clause, pattern)
    body, prelude = _instantiate_callee(
        callee_clause, list(call.children), taken, callee_module, unit.module.name,
        exports,
    )
    new_exprs = list(prelude) + list(body)
    if exports is not None:
        new_exprs.pop()  # the bare export expression: its binders now carry
        # the site pattern's names directly
    elif pattern is not None:
        last = new_exprs.pop()
        new_exprs.append(Expr("match", None, (pattern, last)))
    module = _replace_body(unit.module, clause_key, index, index + 1, new_exprs)
    return RefactorResult(changed={file: print_module(module)})


def _distributable_exports(clause: Clause, pattern: Expr | None) -> dict[str, str] | None:
    """callee export name -> site name, when the final match distributes away.

    Applies when the callee body ends with its bare export variable (or a
    tuple of distinct bound variables) and the site pattern mirrors that
    shape; the export binders are then renamed to the site's names instead
    of leaving an indirection match behind.
    """
    if pattern is None or len(clause.body) < 2:
        return None
    tail = clause.body[-1]
    binders = _body_binders(clause.body[:-1])
    if pattern.kind == "var" and tail.kind == "var" and tail.value in binders:
        return {tail.value: pattern.value}
    if (
        pattern.kind == "tuple"
        and tail.kind == "tuple"
        and len(pattern.children) == len(tail.children)
        and all(c.kind == "var" for c in pattern.children)
        and all(c.kind == "var" and c.value in binders for c in tail.children)
        and len({c.value for c in tail.children}) == len(tail.children)
        and len({c.value for c in pattern.children}) == len(pattern.children)
    ):
        return {
            t.value: p.value for t, p in zip(tail.children, pattern.children)
        }
    return None


def _locate_call_site(module: ModuleAst, line: int, col: int):
    for fi, fd in enumerate(module.fundefs):
        for ci, clause in enumerate(fd.clauses):
            for ei, expr in enumerate(clause.body):
                if not expr.span.contains_point(line, col):
                    continue
                if expr.kind in ("call", "remote"):
                    return (fi, ci), ei, None, expr
                if expr.kind == "match" and expr.children[1].kind in ("call", "remote"):
                    return (fi, ci), ei, expr.children[0], expr.children[1]
                return None
    return None


def _instantiate_callee(
    clause: Clause, actuals, taken: set[str], callee_module, site_module,
    exports: dict[str, str] | None = None,
):
    """Callee body with parameters bound, locals freshened, calls re-resolved."""
    mapping: dict[str, Expr] = {}
    prelude_pairs: list[tuple[Expr, Expr]] = []
    for pattern, actual in zip(clause.patterns, actuals):
        if pattern.kind == "var":
            mapping[pattern.value] = actual
        else:
            prelude_pairs.append((pattern, actual))
    fresh: dict[str, str] = {}
    for name, site_name in (exports or {}).items():
        fresh[name] = site_name
    for name in sorted(_body_binders(clause.body) | _pattern_names(clause.patterns)):
        if name in mapping or name in fresh:
            continue
        fresh[name] = _fresh_name(name, taken)

    def rewrite(e: Expr) -> Expr:
        if e.kind == "var":
            if e.value in mapping:
                return mapping[e.value]
            if e.value in fresh:
                return Expr("var", fresh[e.value], (), e.span)
            return e
        children = tuple(rewrite(c) for c in e.children)
        if e.kind == "call" and callee_module != site_module:
            return Expr("remote", (callee_module, e.value), children, e.span)
        if e.kind == "varcall" and children[0].kind == "fun" and len(children) == 1:
            inner = children[0]
            if inner.value == 0 and len(inner.fun_body()) == 1:
                return inner.fun_body()[0]
        return Expr(e.kind, e.value, children, e.span)

    # Only the pattern side of a destructuring parameter is callee code;
    # the actual argument keeps its site variables untouched.
    prelude = [
        Expr("match", None, (rewrite(pattern), actual))
        for pattern, actual in prelude_pairs
    ]
    body = [rewrite(b) for b in clause.body]
    return body, prelude


def _pattern_names(patterns) -> set[str]:
    out: set[str] = set()
    for p in patterns:
        for node in p.walk():
            if node.kind == "var":
                out.add(node.value)
    return out


def _fresh_name(base: str, taken: set[str]) -> str:
    if base not in taken:
        taken.add(base)
        return base
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    taken.add(f"{base}_{k}")
    return f"{base}_{k}"


# -- extract ----------------------------------------------------------------------


def extract_function(
    project: Project, file: str, span: Span, new_name: str
) -> RefactorResult:
    """Make the selected expression sequence the body of a new function."""
    from clonewright.detector import snap_selection

    ref = snap_selection(project, file, span)
    unit = project.unit(file)
    module = unit.module
    extent = project.span(ref)
    exprs = project.exprs(ref)

    free: list[str] = []
    for root in exprs:
        for node in root.walk():
            if node.kind != "var":
                continue
            occ = unit.bindings.by_span.get(node.span)
            if occ is None or occ.binder is None:
                continue
            if not extent.contains(occ.binder) and occ.name not in free:
                free.append(occ.name)
    decl_order = {}
    for occ in unit.bindings.occurrences:
        if occ.role == "def" and occ.name in free and occ.clause_key == ref.clause_key:
            decl_order.setdefault(occ.name, occ.span.start)
    free.sort(key=lambda n: decl_order.get(n, (0, 0)))
    escapes = _site_escapes(project, ref)

    arity = len(free)
    if module.fundef(new_name, arity) is not None:
        raise RefactorError(f"module {module.name} already defines {new_name}/{arity}")
    if not (new_name[:1].islower() and new_name.isidentifier()):
        raise RefactorError(f"{new_name!r} is not a valid function name")

    body = tuple(exprs)
    if escapes:
        if len(escapes) == 1:
            body = body + (Expr("var", escapes[0]),)
        else:
            body = body + (Expr("tuple", None, tuple(Expr("var", n) for n in escapes)),)
    fd = FunDef(
        new_name,
        arity,
        (Clause(tuple(Expr("var", n) for n in free), body, None),),
        None,
    )
    call = Expr("call", new_name, tuple(Expr("var", n) for n in free))
    if escapes:
        if len(escapes) == 1:
            pattern = Expr("var", escapes[0])
        else:
            pattern = Expr("tuple", None, tuple(Expr("var", n) for n in escapes))
        replacement = Expr("match", None, (pattern, call))
    else:
        replacement = call
    edited = _replace_body(module, ref.clause_key, ref.lo, ref.hi, [replacement])
    edited = _insert_fundef(edited, ref.clause_key[0] + 1, fd)
    return RefactorResult(changed={file: print_module(edited)})


# -- the elimination flow -----------------------------------------------------------


def eliminate(
    project: Project,
    clone_class,
    new_name: str,
    param_names: dict[str, str] | None = None,
    param_order: list[int] | None = None,
    selection: list[InstanceRef] | None = None,
    table: EffectTable | None = None,
) -> RefactorResult:
    """Name the generalisation, adjust its parameters, paste it, and fold.

    The composite behind the interactive flow: the generalisation is pasted
    into the module of the first instance under the chosen name, with
    parameters optionally renamed and reordered, and the selected instances
    are folded against it.
    """
    fd = generalise(project, clone_class, table)
    clause = fd.clauses[0]
    if param_names:
        taken = _clause_var_names(clause)
        for old, new in param_names.items():
            if old not in {p.value for p in clause.patterns}:
                raise RefactorError(f"{old} is not a parameter of the generalisation")
            if not (new[:1].isupper() and new.isidentifier()):
                raise RefactorError(f"{new!r} is not a valid variable name")
            if new in taken:
                raise RefactorError(f"{new} is already used in the generalisation")
            taken.add(new)
        patterns = tuple(_rename_vars(p, param_names) for p in clause.patterns)
        body = tuple(_rename_vars(b, param_names) for b in clause.body)
        clause = Clause(patterns, body, clause.span)
    if param_order is not None:
        if sorted(param_order) != list(range(fd.arity)):
            raise RefactorError("parameter order must be a permutation")
        patterns = tuple(clause.patterns[i] for i in param_order)
        clause = Clause(patterns, clause.body, clause.span)
    if not (new_name[:1].islower() and new_name.isidentifier()):
        raise RefactorError(f"{new_name!r} is not a valid function name")
    fd = FunDef(new_name, fd.arity, (clause,), None)

    host_file = clone_class.instances[0].ref.file
    host_module = project.module(host_file)
    if host_module.fundef(new_name, fd.arity) is not None:
        raise RefactorError(
            f"module {host_module.name} already defines {new_name}/{fd.arity}"
        )
    pasted = _insert_fundef(host_module, len(host_module.fundefs), fd)
    project2 = project.with_module(host_file, pasted)
    refs = [inst.ref for inst in clone_class.instances]
    if selection is not None:
        refs = [r for r in refs if r in selection]
    result = fold(project2, host_module.name, new_name, fd.arity, selection=refs)
    if host_file not in result.changed:
        from clonewright.mel.printer import print_module

        result.changed[host_file] = print_module(pasted)
    return result


# -- inspector ---------------------------------------------------------------------


def variable_instances(project: Project, file: str, line: int, col: int):
    """Defining occurrence plus all uses of the binding at a position."""
    occ = locate_occurrence(project, file, line, col)
    unit = project.unit(file)
    if occ.binder is None:
        return [(occ, False)]
    group = sorted(
        unit.bindings.groups.get(occ.binder, []), key=lambda o: o.span.start
    )
    return [(o, o.role == "def") for o in group]
