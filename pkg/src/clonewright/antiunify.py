"""Least-general common abstraction of expression sequences.

Two (or more) expression sequences are similar when they share a
non-trivial least-general common abstraction: a template whose placeholder
variables can be substituted to recover each instance exactly, up to
renaming of binders local to the instance.

Rules, applied during a simultaneous traversal of all instances:

* identical leaves unify to themselves;
* nodes with the same constructor and arity unify child-wise (call nodes
  compare their resolved callee: a local call in module ``m`` and
  ``m:f(...)`` are the same callee, local calls in different modules are
  not);
* a mismatch at an expression position becomes a placeholder variable,
  memoized per tuple of mismatching subtrees so that repeated identical
  differences share one placeholder;
* a mismatch at a pattern position, or one whose abstraction would swallow
  a defining occurrence or a use of an instance-local binding, makes the
  instances dissimilar;
* instance-local variables unify when their defining occurrences
  correspond positionally; variables free in every instance unify to a
  shared parameter while their cross-instance mapping stays functional,
  and fall back to a placeholder when it does not.

Dissimilarity is a result (``None``), not an error.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from clonewright.mel.bindings import BindingInfo, annotate_fragment
from clonewright.mel.syntax import Expr, node_count
from clonewright.mel.tokens import Span

Substitution = dict[str, Expr]

PLACEHOLDER_PREFIX = "NewVar_"


@dataclass(frozen=True)
class Template:
    """The common abstraction: free-variable parameters, then placeholders."""

    free_params: tuple[str, ...]
    new_params: tuple[str, ...]
    body: tuple[Expr, ...]
    exports: tuple[str, ...] = ()

    @property
    def params(self) -> tuple[str, ...]:
        return self.free_params + self.new_params

    def with_exports(self, exports: tuple[str, ...]) -> "Template":
        return replace(self, exports=exports)


@dataclass
class ClassAbstraction:
    template: Template
    substitutions: list[Substitution]


@dataclass
class InstanceContext:
    """An expression sequence plus enough binding context to classify its variables."""

    exprs: tuple[Expr, ...]
    info: BindingInfo
    extent: Span | None = None  # None: every binder in `info` counts as local
    module: str | None = None

    @classmethod
    def bare(cls, exprs, module: str | None = None) -> "InstanceContext":
        exprs = tuple(exprs)
        return cls(exprs, annotate_fragment(exprs), None, module)

    def classify(self, var: Expr) -> tuple[str, object]:
        """-> (role, payload): def/rebind/local carry the binder span, free the name."""
        occ = self.info.by_span.get(var.span)
        if occ is None or occ.binder is None:
            return ("free", var.value)
        local = self.extent.contains(occ.binder) if self.extent is not None else True
        if occ.role == "def":
            return ("def", occ.binder)
        if occ.role == "rebind":
            return ("rebind-local", occ.binder) if local else ("rebind-free", var.value)
        return ("local", occ.binder) if local else ("free", var.value)


class _NotSimilar(Exception):
    pass


class _State:
    def __init__(self, contexts: list[InstanceContext]):
        self.contexts = contexts
        self.n = len(contexts)
        self._reserved: set[str] | None = None  # built on first placeholder
        self.memo: dict[tuple, str] = {}
        self.new_params: list[str] = []
        self.placeholder_actuals: dict[str, tuple[Expr, ...]] = {}
        self.next_placeholder = 1
        # Local binder correspondence: per instance, binder span -> index.
        self.local_idx: list[dict[Span, int]] = [dict() for _ in contexts]
        self.local_names: list[str] = []  # template names, from instance 0
        # Free-variable parameters, keyed by the cross-instance name tuple so
        # sites carrying the same variables in every instance share a
        # parameter and the result is independent of instance order.
        self.free_tuple_params: dict[tuple[str, ...], str] = {}
        self.free_actuals: dict[str, tuple[Expr, ...]] = {}
        self.free_order: list[str] = []

    @property
    def reserved(self) -> set[str]:
        """Variable names of every instance: off-limits for fresh parameters."""
        if self._reserved is None:
            self._reserved = {
                node.value
                for ctx in self.contexts
                for e in ctx.exprs
                for node in e.walk()
                if node.kind == "var"
            }
        return self._reserved

    def fresh_placeholder(self) -> str:
        while True:
            name = f"{PLACEHOLDER_PREFIX}{self.next_placeholder}"
            self.next_placeholder += 1
            if name not in self.reserved:
                return name

    # -- traversal ------------------------------------------------------

    def unify_seq(self, seqs: list[tuple[Expr, ...]], in_pattern: bool = False):
        length = len(seqs[0])
        if any(len(s) != length for s in seqs):
            raise _NotSimilar
        return tuple(
            self.unify([s[i] for s in seqs], in_pattern) for i in range(length)
        )

    def unify(self, nodes: list[Expr], in_pattern: bool) -> Expr:
        if all(n.kind == "var" for n in nodes):
            return self.unify_vars(nodes, in_pattern)
        head = self.head_key(nodes[0], 0)
        if any(self.head_key(n, i) != head for i, n in enumerate(nodes)):
            return self.mismatch(nodes, in_pattern)
        first = nodes[0]
        if not first.children:
            return first
        kind = first.kind
        if kind == "match":
            rhs = self.unify([n.children[1] for n in nodes], False)
            pattern = self.unify([n.children[0] for n in nodes], True)
            return Expr("match", None, (pattern, rhs), first.span)
        if kind == "fun":
            nparams = first.value
            params = self.unify_seq([n.children[:nparams] for n in nodes], True)
            body = self.unify_seq([n.children[nparams:] for n in nodes], False)
            return Expr("fun", nparams, (*params, *body), first.span)
        if kind == "case":
            scrutinee = self.unify([n.children[0] for n in nodes], False)
            clauses = []
            for i in range(1, len(first.children)):
                clauses.append(self.unify([n.children[i] for n in nodes], False))
            return Expr("case", None, (scrutinee, *clauses), first.span)
        if kind == "caseclause":
            pattern = self.unify([n.children[0] for n in nodes], True)
            body = self.unify_seq([n.children[1:] for n in nodes], False)
            return Expr("caseclause", None, (pattern, *body), first.span)
        children = self.unify_seq([n.children for n in nodes], in_pattern)
        return Expr(kind, first.value, children, first.span)

    def head_key(self, node: Expr, which: int) -> tuple:
        if node.kind == "call":
            module = self.contexts[which].module
            return ("call", (module, node.value), len(node.children))
        if node.kind == "remote":
            return ("call", node.value, len(node.children))
        return (node.kind, node.value, len(node.children))

    def unify_vars(self, nodes: list[Expr], in_pattern: bool) -> Expr:
        cls = [ctx.classify(n) for ctx, n in zip(self.contexts, nodes)]
        roles = {c[0] for c in cls}
        first = nodes[0]
        if roles == {"def"}:
            idx = len(self.local_names)
            self.local_names.append(first.value)
            for i, (_, binder) in enumerate(cls):
                self.local_idx[i][binder] = idx
            return Expr("var", first.value, (), first.span)
        if roles == {"local"} or roles == {"rebind-local"}:
            idxs = [self.local_idx[i].get(binder) for i, (_, binder) in enumerate(cls)]
            if None in idxs or len(set(idxs)) != 1:
                if in_pattern or roles == {"rebind-local"}:
                    raise _NotSimilar
                return self.mismatch(nodes, in_pattern)
            return Expr("var", self.local_names[idxs[0]], (), first.span)
        if roles == {"free"} or roles == {"rebind-free"}:
            key = tuple(n.value for n in nodes)
            param = self.free_tuple_params.get(key)
            if param is None:
                param = self._free_param_name(key[0])
                self.free_tuple_params[key] = param
                self.free_actuals[param] = tuple(nodes)
                self.free_order.append(param)
            return Expr("var", param, (), first.span)
        if in_pattern:
            raise _NotSimilar
        return self.mismatch(nodes, in_pattern)

    def _free_param_name(self, base: str) -> str:
        used = set(self.free_actuals)
        if base not in used:
            return base
        k = 2
        while f"{base}_{k}" in used or f"{base}_{k}" in self.reserved:
            k += 1
        return f"{base}_{k}"

    def mismatch(self, nodes: list[Expr], in_pattern: bool) -> Expr:
        if in_pattern:
            raise _NotSimilar
        for ctx, node in zip(self.contexts, nodes):
            self.check_abstractable(ctx, node)
        key = tuple(nodes)
        name = self.memo.get(key)
        if name is None:
            name = self.fresh_placeholder()
            self.memo[key] = name
            self.new_params.append(name)
            self.placeholder_actuals[name] = tuple(nodes)
        return Expr("var", name, (), nodes[0].span)

    def check_abstractable(self, ctx: InstanceContext, node: Expr) -> None:
        """An abstracted subtree must be evaluable before the clone runs."""
        for sub in node.walk():
            if sub.kind != "var":
                continue
            role, _ = ctx.classify(sub)
            if role in ("def", "rebind-local", "local"):
                raise _NotSimilar


def anti_unify_class(contexts: list[InstanceContext]) -> ClassAbstraction | None:
    """N-way least-general generalization; None when not similar."""
    if len(contexts) < 2:
        raise ValueError("need at least two instances")
    state = _State(contexts)
    try:
        body = state.unify_seq([ctx.exprs for ctx in contexts])
    except _NotSimilar:
        return None
    new_params = tuple(state.new_params)
    if not _has_concrete_node(body, set(new_params)):
        return None
    free_params = tuple(_ordered_free_params(state))
    template = Template(free_params, new_params, body)
    substitutions: list[Substitution] = []
    for i in range(state.n):
        subst: Substitution = {}
        for name in free_params:
            subst[name] = state.free_actuals[name][i]
        for name in new_params:
            subst[name] = state.placeholder_actuals[name][i]
        substitutions.append(subst)
    return ClassAbstraction(template, substitutions)


def anti_unify_pair(
    a, b, contexts: tuple[InstanceContext, InstanceContext] | None = None
):
    """Anti-unify two expression sequences.

    Returns (template, substitution_a, substitution_b) or None. Without
    explicit contexts the sequences are treated as bare fragments whose
    undefined variables are all free.
    """
    a = tuple(a)
    b = tuple(b)
    if len(a) != len(b) or not a:
        return None
    if contexts is None:
        contexts = (InstanceContext.bare(a), InstanceContext.bare(b))
    result = anti_unify_class(list(contexts))
    if result is None:
        return None
    return result.template, result.substitutions[0], result.substitutions[1]


def _ordered_free_params(state: _State) -> list[str]:
    """Free parameters in declaration order of the first instance."""

    def sort_key(name: str):
        var = state.free_actuals[name][0]
        occ = state.contexts[0].info.by_span.get(var.span)
        if occ is not None and occ.binder is not None:
            return (0, occ.binder.start, state.free_order.index(name))
        return (1, (0, 0), state.free_order.index(name))

    return sorted(state.free_order, key=sort_key)


def _has_concrete_node(body, placeholders: set[str]) -> bool:
    for e in body:
        for node in e.walk():
            if not (node.kind == "var" and node.value in placeholders):
                return True
    return False


# -- similarity -----------------------------------------------------------


def similarity(template: Template, instances) -> float:
    """min over instances of size(template) / size(instance)."""
    tsize = node_count(template.body)
    sizes = []
    for inst in instances:
        exprs = inst.exprs if isinstance(inst, InstanceContext) else tuple(inst)
        sizes.append(node_count(exprs))
    return min(tsize / s for s in sizes)


def new_param_count(template: Template) -> int:
    """Placeholders introduced by the generalization; free parameters excluded."""
    return len(template.new_params)


# -- instantiation --------------------------------------------------------


def apply_substitution(
    body, subst: Substitution, freshen_locals: bool = False
) -> tuple[Expr, ...]:
    """Substitute parameter occurrences; zero-ary closure calls beta-reduce.

    With ``freshen_locals`` the template's own binders are renamed apart
    first, so substituted expressions can never be captured.
    """
    renamer = _Renamer(subst, freshen_locals)
    env: dict[str, str] = {}
    return tuple(renamer.expr(e, env) for e in body)


class _Renamer:
    def __init__(self, subst: Substitution, freshen: bool):
        self.subst = subst
        self.freshen = freshen
        self.counter = 0

    def fresh(self, name: str) -> str:
        if not self.freshen:
            return name
        self.counter += 1
        return f"{name}%{self.counter}"

    def pattern(self, e: Expr, env: dict[str, str], shadow: bool = False) -> Expr:
        if e.kind == "var":
            if shadow:
                # fun parameters always open a new binding.
                env.pop(e.value, None)
                env[e.value] = self.fresh(e.value)
                return Expr("var", env[e.value], (), e.span)
            if e.value in env:  # rebinding: refers to the earlier binder
                return Expr("var", env[e.value], (), e.span)
            if e.value in self.subst:
                # Rebinding of a parameter; it always maps to a variable.
                target = self.subst[e.value]
                return Expr("var", target.value, (), e.span)
            env[e.value] = self.fresh(e.value)
            return Expr("var", env[e.value], (), e.span)
        return Expr(
            e.kind,
            e.value,
            tuple(self.pattern(c, env, shadow) for c in e.children),
            e.span,
        )

    def expr(self, e: Expr, env: dict[str, str]) -> Expr:
        k = e.kind
        if k == "var":
            if e.value in env:
                return Expr("var", env[e.value], (), e.span)
            if e.value in self.subst:
                return self.subst[e.value]
            return e
        if k == "match":
            rhs = self.expr(e.children[1], env)
            pattern = self.pattern(e.children[0], env)
            return Expr("match", None, (pattern, rhs), e.span)
        if k == "varcall":
            callee = e.children[0]
            args = [self.expr(c, env) for c in e.children[1:]]
            if (
                callee.value not in env
                and callee.value in self.subst
                and not args
                and self.subst[callee.value].kind == "fun"
                and self.subst[callee.value].value == 0
                and len(self.subst[callee.value].fun_body()) == 1
            ):
                return self.subst[callee.value].fun_body()[0]
            new_callee = self.expr(callee, env)
            return Expr("varcall", None, (new_callee, *args), e.span)
        if k == "fun":
            inner = dict(env)
            params = tuple(self.pattern(p, inner, shadow=True) for p in e.fun_params())
            body = tuple(self.expr(b, inner) for b in e.fun_body())
            return Expr("fun", e.value, (*params, *body), e.span)
        if k == "case":
            scrutinee = self.expr(e.children[0], env)
            clauses = []
            for cl in e.children[1:]:
                inner = dict(env)
                pattern = self.pattern(cl.children[0], inner)
                body = tuple(self.expr(b, inner) for b in cl.children[1:])
                clauses.append(Expr("caseclause", None, (pattern, *body), cl.span))
            return Expr("case", None, (scrutinee, *clauses), e.span)
        return Expr(k, e.value, tuple(self.expr(c, env) for c in e.children), e.span)


# -- alpha equivalence ----------------------------------------------------


def alpha_equal(a, b) -> bool:
    """Structural equality up to renaming of bound variables.

    Free variables must agree by name. Accepts expressions, expression
    sequences, function definitions, and whole modules.
    """
    from clonewright.mel.syntax import Clause, FunDef, ModuleAst

    if isinstance(a, ModuleAst) and isinstance(b, ModuleAst):
        if a.name != b.name or len(a.fundefs) != len(b.fundefs):
            return False
        return all(alpha_equal(x, y) for x, y in zip(a.fundefs, b.fundefs))
    if isinstance(a, FunDef) and isinstance(b, FunDef):
        if a.name != b.name or a.arity != b.arity or len(a.clauses) != len(b.clauses):
            return False
        return all(alpha_equal(x, y) for x, y in zip(a.clauses, b.clauses))
    if isinstance(a, Clause) and isinstance(b, Clause):
        if len(a.body) != len(b.body):
            return False
        env: dict[str, str] = {}
        rev: dict[str, str] = {}
        for pa, pb in zip(a.patterns, b.patterns):
            if not _alpha_pattern(pa, pb, env, rev):
                return False
        return all(_alpha_expr(x, y, env, rev) for x, y in zip(a.body, b.body))
    if isinstance(a, Expr) and isinstance(b, Expr):
        return _alpha_expr(a, b, {}, {})
    a = tuple(a)
    b = tuple(b)
    if len(a) != len(b):
        return False
    env, rev = {}, {}
    return all(_alpha_expr(x, y, env, rev) for x, y in zip(a, b))


def _alpha_bind(na: str, nb: str, env: dict, rev: dict) -> bool:
    if na in env or nb in rev:
        return env.get(na) == nb and rev.get(nb) == na
    env[na] = nb
    rev[nb] = na
    return True


def _alpha_pattern(a: Expr, b: Expr, env: dict, rev: dict) -> bool:
    if a.kind != b.kind:
        return False
    if a.kind == "var":
        if a.value in env or b.value in rev:
            return env.get(a.value) == b.value and rev.get(b.value) == a.value
        return _alpha_bind(a.value, b.value, env, rev)
    if a.value != b.value or len(a.children) != len(b.children):
        return False
    return all(
        _alpha_pattern(x, y, env, rev) for x, y in zip(a.children, b.children)
    )


def _alpha_expr(a: Expr, b: Expr, env: dict, rev: dict) -> bool:
    if a.kind != b.kind:
        return False
    if a.kind == "var":
        if a.value in env:
            return env[a.value] == b.value and rev.get(b.value) == a.value
        if b.value in rev:
            return False
        return a.value == b.value  # both free
    if a.kind == "match":
        if not _alpha_expr(a.children[1], b.children[1], env, rev):
            return False
        return _alpha_pattern(a.children[0], b.children[0], env, rev)
    if a.kind == "fun":
        if a.value != b.value or len(a.children) != len(b.children):
            return False
        inner_env, inner_rev = dict(env), dict(rev)
        for pa, pb in zip(a.fun_params(), b.fun_params()):
            if not _alpha_shadow(pa, pb, inner_env, inner_rev):
                return False
        return all(
            _alpha_expr(x, y, inner_env, inner_rev)
            for x, y in zip(a.fun_body(), b.fun_body())
        )
    if a.kind == "case":
        if len(a.children) != len(b.children):
            return False
        if not _alpha_expr(a.children[0], b.children[0], env, rev):
            return False
        for ca, cb in zip(a.children[1:], b.children[1:]):
            inner_env, inner_rev = dict(env), dict(rev)
            if not _alpha_pattern(ca.children[0], cb.children[0], inner_env, inner_rev):
                return False
            if len(ca.children) != len(cb.children):
                return False
            if not all(
                _alpha_expr(x, y, inner_env, inner_rev)
                for x, y in zip(ca.children[1:], cb.children[1:])
            ):
                return False
        return True
    if a.value != b.value or len(a.children) != len(b.children):
        return False
    return all(_alpha_expr(x, y, env, rev) for x, y in zip(a.children, b.children))


def _alpha_shadow(pa: Expr, pb: Expr, env: dict, rev: dict) -> bool:
    """Bind fun parameters, dropping any outer mapping they shadow."""
    if pa.kind != pb.kind:
        return False
    if pa.kind == "var":
        env.pop(pa.value, None)
        rev.pop(pb.value, None)
        env[pa.value] = pb.value
        rev[pb.value] = pa.value
        return True
    if pa.value != pb.value or len(pa.children) != len(pb.children):
        return False
    return all(
        _alpha_shadow(x, y, env, rev) for x, y in zip(pa.children, pb.children)
    )


def template_as_fundef(template: Template, name: str = "new_fun"):
    """The template viewed as a plain function definition (no closure wrapping)."""
    from clonewright.mel.syntax import Clause, FunDef

    params = tuple(Expr("var", p) for p in template.params)
    body = template.body
    if template.exports:
        if len(template.exports) == 1:
            tail = Expr("var", template.exports[0])
        else:
            tail = Expr("tuple", None, tuple(Expr("var", x) for x in template.exports))
        body = body + (tail,)
    return FunDef(name, len(params), (Clause(params, body, None),), None)


def canonical_text(template: Template, canonical_free: bool = False) -> str:
    """Deterministic rendering with binders and placeholders renamed canonically."""
    from clonewright.mel.printer import print_expr

    mapping: dict[str, str] = {}
    for i, p in enumerate(template.new_params):
        mapping[p] = f"P{i}"
    if canonical_free:
        for i, p in enumerate(template.free_params):
            mapping[p] = f"F{i}"
    free = set(template.free_params)
    counter = [0]

    def rename_pattern(e: Expr, env: dict[str, str]) -> Expr:
        if e.kind == "var":
            if e.value in env:
                return Expr("var", env[e.value], (), e.span)
            if e.value in free:  # rebinding of a free parameter
                return Expr("var", mapping.get(e.value, e.value), (), e.span)
            counter[0] += 1
            env[e.value] = f"B{counter[0]}"
            return Expr("var", env[e.value], (), e.span)
        return Expr(
            e.kind, e.value, tuple(rename_pattern(c, env) for c in e.children), e.span
        )

    def rename(e: Expr, env: dict[str, str]) -> Expr:
        if e.kind == "var":
            name = env.get(e.value) or mapping.get(e.value) or e.value
            return Expr("var", name, (), e.span)
        if e.kind == "match":
            rhs = rename(e.children[1], env)
            pattern = rename_pattern(e.children[0], env)
            return Expr("match", None, (pattern, rhs), e.span)
        if e.kind == "fun":
            inner = dict(env)
            params = tuple(rename_pattern(p, inner) for p in e.fun_params())
            body = tuple(rename(b, inner) for b in e.fun_body())
            return Expr("fun", e.value, (*params, *body), e.span)
        if e.kind == "case":
            scrutinee = rename(e.children[0], env)
            clauses = []
            for cl in e.children[1:]:
                inner = dict(env)
                pattern = rename_pattern(cl.children[0], inner)
                body = tuple(rename(b, inner) for b in cl.children[1:])
                clauses.append(Expr("caseclause", None, (pattern, *body), cl.span))
            return Expr("case", None, (scrutinee, *clauses), e.span)
        return Expr(e.kind, e.value, tuple(rename(c, env) for c in e.children), e.span)

    env: dict[str, str] = {}
    rendered = [print_expr(rename(e, env)) for e in template.body]
    return ", ".join(rendered)
