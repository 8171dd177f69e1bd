"""Detection and search: verify candidates, maximalize, gate, and report.

Detection runs in two phases. Phase one produces seed region pairs: suffix
tree candidates over the normalized token streams, plus single-expression
pairs bucketed by top constructor (with cross-module callee resolution) so
clones whose every repeated region breaks mid-expression are still reached.
Phase two explores aligned range pairs outward from the seeds: a range
pair that anti-unifies stays anti-unifiable on every subrange, so this
search visits exactly the anti-unifiable pairs. Pairs that pass the
thresholds and cannot be extended by one expression are merged into
classes, gated, and reported.

A reported class never contains a false positive: instantiating its
template with an instance's substitution reproduces that instance exactly,
up to renaming of clone-local binders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import mean, median

from clonewright.antiunify import (
    ClassAbstraction,
    anti_unify_class,
    new_param_count,
    similarity,
)
from clonewright.config import Thresholds
from clonewright.errors import SelectionError
from clonewright.mel.syntax import Expr, cover_span
from clonewright.mel.tokens import Span
from clonewright.project import InstanceRef, Project
from clonewright.suffix import build_index, candidates as suffix_candidates


@dataclass
class CloneInstance:
    ref: InstanceRef
    span: Span
    substitution: dict[str, Expr]
    loc: int
    token_count: int


@dataclass
class CloneClass:
    instances: list[CloneInstance]
    template: object  # antiunify.Template, exports filled in
    similarity: float
    kind: str  # intra-module | inter-module

    @property
    def size_loc(self) -> int:
        return self.instances[0].loc

    @property
    def occurrences(self) -> int:
        return len(self.instances)

    @property
    def total_params(self) -> int:
        return len(self.template.params)

    @property
    def new_params(self) -> int:
        return len(self.template.new_params)

    def span_set(self) -> tuple:
        return tuple(i.ref.sort_key() for i in self.instances)


# -- verification ------------------------------------------------------------


class _Verifier:
    """Anti-unification over instance refs, memoized content-addressably."""

    def __init__(self, project: Project, cache=None):
        self.project = project
        self.cache = cache
        self.local: dict[tuple, ClassAbstraction | None] = {}
        self._passes: dict[tuple, bool] = {}
        self._digests = {f: u.digest for f, u in project.units.items()}

    def key(self, refs: tuple[InstanceRef, ...]) -> tuple:
        digests = self._digests
        return tuple((digests[r.file], r.clause_key, r.lo, r.hi) for r in refs)

    def verify(self, refs: tuple[InstanceRef, ...]) -> ClassAbstraction | None:
        key = self.key(refs)
        if key in self.local:
            return self.local[key]
        if self.cache is not None:
            hit, value = self.cache.get_verification(key)
            if hit:
                self.local[key] = value
                return value
        contexts = [self.project.context(r) for r in refs]
        value = anti_unify_class(contexts)
        self.local[key] = value
        if self.cache is not None:
            self.cache.put_verification(key, value)
        return value

    def check(self, refs, thresholds: Thresholds) -> bool:
        """verify + passes, against the persistent memo where possible."""
        key = (
            "passes-v1",
            self.key(refs),
            thresholds.max_new_params,
            thresholds.min_similarity,
        )
        cached = self._passes.get(key)
        if cached is not None:
            return cached
        if self.cache is not None:
            hit, value = self.cache.get_verification(key)
            if hit:
                self._passes[key] = value
                return value
        result = self.passes(refs, self.verify(refs), thresholds)
        self._passes[key] = result
        if self.cache is not None:
            self.cache.put_verification(key, result)
        return result

    def passes(self, refs, abstraction, thresholds: Thresholds) -> bool:
        if abstraction is None:
            return False
        if new_param_count(abstraction.template) > thresholds.max_new_params:
            return False
        contexts = [self.project.exprs(r) for r in refs]
        return similarity(abstraction.template, contexts) >= thresholds.min_similarity


# -- seeding -----------------------------------------------------------------


def _pattern_skeleton(pattern: Expr) -> tuple:
    """Rigid shape of a pattern: anti-unification never abstracts inside one,
    so expressions whose pattern skeletons differ can never unify."""
    if pattern.kind == "var":
        return ("var",)
    return (
        pattern.kind,
        pattern.value,
        tuple(_pattern_skeleton(c) for c in pattern.children),
    )


def _top_key(expr: Expr, module_name: str) -> tuple:
    if expr.kind == "call":
        return ("call", (module_name, expr.value), len(expr.children))
    if expr.kind == "remote":
        return ("call", expr.value, len(expr.children))
    if expr.kind == "var":
        # Any two variables can unify to a shared free parameter.
        return ("var",)
    if expr.kind in ("int", "str"):
        return (expr.kind, expr.value)
    if expr.kind == "match":
        return ("match", _pattern_skeleton(expr.children[0]))
    if expr.kind == "fun":
        return (
            "fun",
            len(expr.children),
            tuple(_pattern_skeleton(p) for p in expr.fun_params()),
        )
    if expr.kind == "case":
        return (
            "case",
            len(expr.children),
            tuple(
                _pattern_skeleton(clause.children[0]) for clause in expr.children[1:]
            ),
        )
    return (expr.kind, expr.value, len(expr.children))


def _bucket_seed_pairs(project: Project, skip_file_pairs=frozenset()):
    buckets: dict[tuple, list[InstanceRef]] = {}
    for file in project.files:
        unit = project.unit(file)
        for fi, fd in enumerate(unit.module.fundefs):
            for ci, clause in enumerate(fd.clauses):
                for ei, expr in enumerate(clause.body):
                    key = _top_key(expr, unit.module.name)
                    buckets.setdefault(key, []).append(
                        InstanceRef(file, (fi, ci), ei, ei + 1)
                    )
    pairs: set[tuple[InstanceRef, InstanceRef]] = set()
    for refs in buckets.values():
        refs.sort(key=InstanceRef.sort_key)
        for i in range(len(refs)):
            for j in range(i + 1, len(refs)):
                a, b = refs[i], refs[j]
                if _file_pair(a, b) not in skip_file_pairs:
                    pairs.add((a, b))
    return pairs


def _candidate_seed_pairs(project: Project, thresholds: Thresholds, skip_file_pairs=frozenset()):
    norms = [project.unit(f).norm for f in project.files]
    index = build_index(norms)
    pairs: set[tuple[InstanceRef, InstanceRef]] = set()
    for cand in suffix_candidates(index, thresholds.for_seeding()):
        refs = [
            InstanceRef(m.file, m.clause_key, m.expr_lo, m.expr_hi)
            for m in cand.members
        ]
        refs.sort(key=InstanceRef.sort_key)
        for i in range(len(refs)):
            for j in range(i + 1, len(refs)):
                a, b = refs[i], refs[j]
                if _file_pair(a, b) not in skip_file_pairs:
                    pairs.add((a, b))
    return pairs


def _file_pair(a: InstanceRef, b: InstanceRef) -> tuple[str, str]:
    return (a.file, b.file) if a.file <= b.file else (b.file, a.file)


# -- pair exploration ---------------------------------------------------------


def _pair_valid(project: Project, a: InstanceRef, b: InstanceRef) -> bool:
    if a.length != b.length or a.length < 1:
        return False
    if (a.file, a.clause_key) == (b.file, b.clause_key):
        if not (a.hi <= b.lo or b.hi <= a.lo):
            return False
    return a != b


def _extensions(project: Project, pair):
    a, b = pair
    body_a = project.clause(a).body
    body_b = project.clause(b).body
    if a.lo > 0 and b.lo > 0:
        yield (
            InstanceRef(a.file, a.clause_key, a.lo - 1, a.hi),
            InstanceRef(b.file, b.clause_key, b.lo - 1, b.hi),
        )
    if a.hi < len(body_a) and b.hi < len(body_b):
        yield (
            InstanceRef(a.file, a.clause_key, a.lo, a.hi + 1),
            InstanceRef(b.file, b.clause_key, b.lo, b.hi + 1),
        )


def _order_pair(a: InstanceRef, b: InstanceRef):
    return (a, b) if a.sort_key() <= b.sort_key() else (b, a)


def _successful_pairs(project: Project, seeds, verifier: _Verifier):
    """All anti-unifiable aligned pairs reachable from the seeds."""
    visited: set[tuple] = set()
    success: set[tuple] = set()
    stack = [
        _order_pair(*p) for p in seeds if _pair_valid(project, *p)
    ]
    while stack:
        pair = stack.pop()
        if pair in visited:
            continue
        visited.add(pair)
        abstraction = verifier.verify(pair)
        if abstraction is None:
            continue
        success.add(pair)
        for ext in _extensions(project, pair):
            ext = _order_pair(*ext)
            if ext not in visited and _pair_valid(project, *ext):
                stack.append(ext)
    return success


def _all_successful_pairs(project: Project, thresholds: Thresholds, verifier: _Verifier, cache=None):
    """Successful pairs for the whole project, reusing per-file-pair results.

    The successful pairs between two files are a pure function of those two
    files' contents, so the cache keys them by (file, digest) pairs and an
    edit only re-explores the file pairs it touches.
    """
    cached_pairs: dict[tuple, list] = {}
    if cache is not None:
        for fa in project.files:
            for fb in project.files:
                if fa > fb:
                    continue
                key = _pairs_cache_key(project, fa, fb)
                hit, value = cache.get_verification(key)
                if hit:
                    cached_pairs[(fa, fb)] = value
    skip = frozenset(cached_pairs)
    seeds = _bucket_seed_pairs(project, skip)
    if not cached_pairs:
        # Single-expression seeds already reach every anti-unifiable pair;
        # suffix-tree candidates are a cold-start accelerator.
        seeds |= _candidate_seed_pairs(project, thresholds, skip)
    success = _successful_pairs(project, seeds, verifier)

    fresh: dict[tuple, list] = {}
    for pair in success:
        fresh.setdefault(_file_pair(*pair), []).append(pair)
    if cache is not None:
        for fa in project.files:
            for fb in project.files:
                if fa > fb or (fa, fb) in cached_pairs:
                    continue
                payload = [
                    tuple((r.file, r.clause_key, r.lo, r.hi) for r in pair)
                    for pair in fresh.get((fa, fb), [])
                ]
                cache.put_verification(_pairs_cache_key(project, fa, fb), payload)
    for pairs in cached_pairs.values():
        for raw in pairs:
            success.add(tuple(InstanceRef(*r) for r in raw))
    return success


def _pairs_cache_key(project: Project, fa: str, fb: str) -> tuple:
    da = project.unit(fa).digest
    db = project.unit(fb).digest
    if fa == fb:
        return ("pairs-v1", (fa, da))
    return ("pairs-v1", (fa, da), (fb, db))


def _gates_reachable(project: Project, pair, thresholds: Thresholds) -> bool:
    """Can any class containing this pair pass the size gates?

    Merging never changes the expression count and can only lower the
    minimum token count, so a pair failing both gates is dead weight.
    """
    a, b = pair
    if a.length >= thresholds.min_len:
        return True
    if thresholds.min_toks <= 0:
        return False
    return min(project.token_count(a), project.token_count(b)) >= thresholds.min_toks


def _maximal_pairs(project, success, verifier, thresholds: Thresholds):
    """Pairs passing thresholds with no passing one-step extension."""
    out = []
    for pair in success:
        if not _gates_reachable(project, pair, thresholds):
            continue
        if not verifier.check(pair, thresholds):
            continue
        extendable = False
        for ext in _extensions(project, pair):
            ext = _order_pair(*ext)
            if ext in success and verifier.check(ext, thresholds):
                extendable = True
                break
        if not extendable:
            out.append(pair)
    out.sort(key=lambda p: (p[0].sort_key(), p[1].sort_key()))
    return out


# -- merging into classes ------------------------------------------------------


def _overlap_free(project: Project, refs) -> bool:
    spans = [(r.file, project.span(r)) for r in refs]
    for i in range(len(spans)):
        for j in range(i + 1, len(spans)):
            if spans[i][0] == spans[j][0] and spans[i][1].overlaps(spans[j][1]):
                return False
    return True


def _merge_pairs(project, pairs, verifier, thresholds: Thresholds):
    """Union pairs into instance sets by connectivity, largest unions first.

    Within one connected component (pairs of equal length sharing a ref)
    groups grow greedily in deterministic order; a pair joins the first
    group whose union still verifies within thresholds.
    """
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for a, b in pairs:
        for r in (a, b):
            parent.setdefault(r, r)
        union(a, b)
    components: dict = {}
    for a, b in pairs:
        components.setdefault(find(a), []).append((a, b))

    groups: list[tuple[InstanceRef, ...]] = []
    for root in sorted(components, key=InstanceRef.sort_key):
        comp_groups: list[tuple[InstanceRef, ...]] = []
        for a, b in components[root]:
            pair_refs = {a, b}
            placed = False
            for gi, refs in enumerate(comp_groups):
                refset = set(refs)
                if pair_refs <= refset:
                    placed = True
                    break
                merged = tuple(
                    sorted(refset | pair_refs, key=InstanceRef.sort_key)
                )
                if not _overlap_free(project, merged):
                    continue
                if verifier.check(merged, thresholds):
                    comp_groups[gi] = merged
                    placed = True
                    break
            if not placed:
                comp_groups.append(tuple(sorted(pair_refs, key=InstanceRef.sort_key)))
        for refs in comp_groups:
            if verifier.check(refs, thresholds):
                groups.append(refs)
    return groups


# -- exports -------------------------------------------------------------------


def _collect_def_pairs(template_exprs, instance_exprs, placeholders: set[str], out):
    """Parallel walk pairing template binder names with instance binder nodes."""
    for te, ie in zip(template_exprs, instance_exprs):
        _collect_def_pairs_expr(te, ie, placeholders, out, False)


def _collect_def_pairs_expr(te: Expr, ie: Expr, placeholders, out, in_pattern):
    if te.kind == "var" and te.value in placeholders:
        return  # abstracted subtree: contains no definitions
    if te.kind == "var":
        if in_pattern and ie.kind == "var":
            out.append((te.value, ie))
        return
    if te.kind == "match":
        _collect_def_pairs_expr(te.children[0], ie.children[0], placeholders, out, True)
        _collect_def_pairs_expr(te.children[1], ie.children[1], placeholders, out, False)
        return
    if te.kind == "fun":
        np = te.value
        for tp, ip in zip(te.children[:np], ie.children[:np]):
            _collect_def_pairs_expr(tp, ip, placeholders, out, True)
        for tb, ib in zip(te.children[np:], ie.children[np:]):
            _collect_def_pairs_expr(tb, ib, placeholders, out, False)
        return
    if te.kind == "caseclause":
        _collect_def_pairs_expr(te.children[0], ie.children[0], placeholders, out, True)
        for tb, ib in zip(te.children[1:], ie.children[1:]):
            _collect_def_pairs_expr(tb, ib, placeholders, out, False)
        return
    for tc, ic in zip(te.children, ie.children):
        _collect_def_pairs_expr(tc, ic, placeholders, out, in_pattern)


def compute_exports(project: Project, refs, abstraction: ClassAbstraction) -> tuple[str, ...]:
    """Template binders that any instance uses after the clone, in declaration order."""
    template = abstraction.template
    placeholders = set(template.new_params)
    exported: set[str] = set()
    order: list[str] = []
    for ref in refs:
        unit = project.unit(ref.file)
        pairs: list[tuple[str, Expr]] = []
        _collect_def_pairs(template.body, project.exprs(ref), placeholders, pairs)
        extent = project.span(ref)
        for name, node in pairs:
            if name not in order:
                order.append(name)
            occ = unit.bindings.by_span.get(node.span)
            if occ is None or occ.role != "def":
                continue
            group = unit.bindings.groups.get(occ.binder, [])
            if any(o.span.start >= extent.end for o in group if o.role != "def"):
                exported.add(name)
    return tuple(n for n in order if n in exported)


# -- public pipeline -------------------------------------------------------------


def _build_class(project: Project, refs, abstraction: ClassAbstraction) -> CloneClass:
    template = abstraction.template.with_exports(
        compute_exports(project, refs, abstraction)
    )
    instances = [
        CloneInstance(
            ref,
            project.span(ref),
            abstraction.substitutions[i],
            project.loc(ref),
            project.token_count(ref),
        )
        for i, ref in enumerate(refs)
    ]
    sim = similarity(abstraction.template, [project.exprs(r) for r in refs])
    files = {r.file for r in refs}
    kind = "inter-module" if len(files) > 1 else "intra-module"
    return CloneClass(instances, template, sim, kind)


def _final_gates(project: Project, cls: CloneClass, thresholds: Thresholds) -> bool:
    if cls.occurrences < thresholds.min_freq:
        return False
    expr_count = cls.instances[0].ref.length
    min_tokens = min(i.token_count for i in cls.instances)
    return expr_count >= thresholds.min_len or (
        thresholds.min_toks > 0 and min_tokens >= thresholds.min_toks
    )


def _drop_subsumed(classes: list[CloneClass]) -> list[CloneClass]:
    """Drop a class when an equal-频-class strictly contains all its spans."""
    kept: list[CloneClass] = []
    for cls in classes:
        subsumed = False
        for other in classes:
            if other is cls or other.occurrences != cls.occurrences:
                continue
            pairs = zip(cls.instances, other.instances)
            if all(
                a.ref.file == b.ref.file
                and a.ref.clause_key == b.ref.clause_key
                and b.ref.lo <= a.ref.lo
                and a.ref.hi <= b.ref.hi
                and (b.ref.lo, b.ref.hi) != (a.ref.lo, a.ref.hi)
                for a, b in pairs
            ):
                subsumed = True
                break
        if not subsumed:
            kept.append(cls)
    return kept


def finalize_pairs(project, pairs, thresholds, cache=None, on_class=None):
    """Shared tail of detection: merge maximal pairs, gate, and order."""
    verifier = _Verifier(project, cache)
    groups = _merge_pairs(project, pairs, verifier, thresholds)
    classes: list[CloneClass] = []
    seen: set[tuple] = set()
    for refs in groups:
        cls = _build_class(project, refs, verifier.verify(refs))
        key = cls.span_set()
        if key in seen:
            continue
        seen.add(key)
        if not _final_gates(project, cls, thresholds):
            continue
        if on_class is not None:
            on_class(cls)
        classes.append(cls)
    classes = _drop_subsumed(classes)
    classes.sort(key=lambda c: c.span_set())
    return classes


def detect(
    project: Project,
    thresholds: Thresholds | None = None,
    cache=None,
    on_class=None,
) -> list[CloneClass]:
    """Find all clone classes in the project."""
    thresholds = thresholds or Thresholds()
    verifier = _Verifier(project, cache)
    success = _all_successful_pairs(project, thresholds, verifier, cache)
    pairs = _maximal_pairs(project, success, verifier, thresholds)
    return finalize_pairs(project, pairs, thresholds, cache, on_class)


def detect_incremental(
    texts: dict[str, str], thresholds: Thresholds | None, cache
) -> tuple[list[CloneClass], object]:
    """detect() with artifact reuse; the result is identical to a cold run."""
    project = Project.from_texts(texts, cache)
    classes = detect(project, thresholds, cache)
    return classes, cache


# -- search mode -----------------------------------------------------------------


def snap_selection(project: Project, file: str, span: Span) -> InstanceRef:
    """Resolve a source span to the whole-expression subsequence it covers."""
    unit = project.unit(file)
    for fi, fd in enumerate(unit.module.fundefs):
        for ci, clause in enumerate(fd.clauses):
            touched = [
                (ei, e)
                for ei, e in enumerate(clause.body)
                if e.span.overlaps(span)
            ]
            if not touched:
                continue
            if all(span.contains(e.span) for _, e in touched):
                lo = touched[0][0]
                hi = touched[-1][0] + 1
                return InstanceRef(file, (fi, ci), lo, hi)
            suggestion = cover_span([e for _, e in touched])
            raise SelectionError(
                "selection must cover whole expressions; "
                f"nearest whole-expression span is {file}:{suggestion.render()}",
                suggestion=suggestion,
            )
    raise SelectionError("selection does not cover any expression")


def search(
    project: Project,
    file: str,
    span: Span,
    thresholds: Thresholds | None = None,
) -> CloneClass:
    """All code similar to the selection; size gates do not apply."""
    thresholds = thresholds or Thresholds()
    selection = snap_selection(project, file, span)
    verifier = _Verifier(project)
    matches: list[InstanceRef] = [selection]
    length = selection.length
    for other_file in project.files:
        unit = project.unit(other_file)
        for fi, fd in enumerate(unit.module.fundefs):
            for ci, clause in enumerate(fd.clauses):
                for lo in range(0, len(clause.body) - length + 1):
                    ref = InstanceRef(other_file, (fi, ci), lo, lo + length)
                    if ref == selection:
                        continue
                    pair = _order_pair(selection, ref)
                    if not _pair_valid(project, *pair):
                        continue
                    abstraction = verifier.verify(pair)
                    if abstraction is not None and verifier.passes(
                        pair, abstraction, thresholds
                    ):
                        matches.append(ref)
    matches.sort(key=InstanceRef.sort_key)
    accepted = [selection]
    for ref in matches:
        if ref == selection:
            continue
        trial = tuple(sorted({*accepted, ref}, key=InstanceRef.sort_key))
        if not _overlap_free(project, trial):
            continue
        abstraction = verifier.verify(trial)
        if abstraction is not None and verifier.passes(trial, abstraction, thresholds):
            accepted = list(trial)
    refs = tuple(sorted(accepted, key=InstanceRef.sort_key))
    if len(refs) == 1:
        # A lone selection: reported as a single-instance class.
        from clonewright.antiunify import Template

        template = Template((), (), project.exprs(selection))
        instance = CloneInstance(
            selection,
            project.span(selection),
            {},
            project.loc(selection),
            project.token_count(selection),
        )
        return CloneClass([instance], template, 1.0, "intra-module")
    abstraction = verifier.verify(refs)
    return _build_class(project, refs, abstraction)


# -- metrics ----------------------------------------------------------------------


@dataclass
class MetricsTable:
    columns: tuple[str, ...] = (
        "Size (LOC)",
        "Occurrences",
        "Total parameters",
        "New parameters",
    )
    rows: list[tuple[str, tuple]] = field(default_factory=list)
    clone_count: int = 0


def metrics(classes: list[CloneClass]) -> MetricsTable:
    """Per-class statistics with aggregate and superlative rows."""
    table = MetricsTable()
    table.clone_count = len(classes)
    if not classes:
        table.rows = [(label, ("n/a",) * 4) for label in (
            "Median", "Mean", "Maximum", "Minimum",
            "Largest clone", "Second largest",
            "Most occurring clone", "Second most occurring",
            "Most parameterised",
        )]
        return table

    def stats(cls: CloneClass) -> tuple:
        return (cls.size_loc, cls.occurrences, cls.total_params, cls.new_params)

    data = [stats(c) for c in classes]
    columns = list(zip(*data))
    table.rows.append(("Median", tuple(median(col) for col in columns)))
    table.rows.append(("Mean", tuple(round(mean(col), 1) for col in columns)))
    table.rows.append(("Maximum", tuple(max(col) for col in columns)))
    table.rows.append(("Minimum", tuple(min(col) for col in columns)))

    by_size = sorted(
        classes, key=lambda c: (-c.size_loc, c.span_set())
    )
    by_occ = sorted(
        classes, key=lambda c: (-c.occurrences, c.span_set())
    )
    by_params = sorted(
        classes, key=lambda c: (-c.total_params, c.span_set())
    )
    table.rows.append(("Largest clone", stats(by_size[0])))
    table.rows.append(
        ("Second largest", stats(by_size[1]) if len(by_size) > 1 else ("n/a",) * 4)
    )
    table.rows.append(("Most occurring clone", stats(by_occ[0])))
    table.rows.append(
        (
            "Second most occurring",
            stats(by_occ[1]) if len(by_occ) > 1 else ("n/a",) * 4,
        )
    )
    table.rows.append(("Most parameterised", stats(by_params[0])))
    return table
