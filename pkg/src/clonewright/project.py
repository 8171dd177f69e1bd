"""Project loading: parsed, annotated, normalized source units."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from clonewright.errors import SourceError
from clonewright.antiunify import InstanceContext
from clonewright.mel import annotate_bindings, parse, tokenize
from clonewright.mel.bindings import BindingInfo
from clonewright.mel.syntax import Clause, Expr, ModuleAst, cover_span
from clonewright.mel.tokens import Span, Token
from clonewright.suffix import FileNorm, normalize


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class SourceUnit:
    file: str
    text: str
    digest: str
    tokens: list[Token]
    module: ModuleAst
    bindings: BindingInfo
    norm: FileNorm


def build_unit(file: str, text: str, cache=None) -> SourceUnit:
    digest = digest_text(text)
    if cache is not None:
        cached = cache.get_unit((file, digest))
        if cached is not None:
            return cached
    tokens = tokenize(text, file)
    module = parse(tokens, file)
    unit = SourceUnit(
        file,
        text,
        digest,
        tokens,
        module,
        annotate_bindings(module),
        normalize(tokens, module),
    )
    if cache is not None:
        cache.put_unit((file, digest), unit)
    return unit


@dataclass(frozen=True)
class InstanceRef:
    """An expression subsequence of one clause body: [lo, hi)."""

    file: str
    clause_key: tuple[int, int]
    lo: int
    hi: int

    @property
    def length(self) -> int:
        return self.hi - self.lo

    def sort_key(self):
        return (self.file, self.clause_key, self.lo, self.hi)


@dataclass
class Project:
    units: dict[str, SourceUnit] = field(default_factory=dict)
    failures: list[tuple[str, str]] = field(default_factory=list)
    _spans: dict = field(default_factory=dict, repr=False)
    _contexts: dict = field(default_factory=dict, repr=False)
    _tokens: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_texts(cls, texts: dict[str, str], cache=None) -> "Project":
        project = cls()
        for file in sorted(texts):
            try:
                project.units[file] = build_unit(file, texts[file], cache)
            except SourceError as err:
                project.failures.append((file, str(err)))
        return project

    @classmethod
    def load(cls, paths: list[str | Path], cache=None, root: Path | None = None) -> "Project":
        texts: dict[str, str] = {}
        unreadable: list[tuple[str, str]] = []
        for path in _expand(paths):
            name = str(path if root is None else path.relative_to(root))
            try:
                texts[name] = path.read_text(encoding="utf-8")
            except OSError as err:
                unreadable.append((name, f"cannot read: {err}"))
        project = cls.from_texts(texts, cache)
        project.failures.extend(unreadable)
        return project

    @property
    def files(self) -> list[str]:
        return sorted(self.units)

    def unit(self, file: str) -> SourceUnit:
        return self.units[file]

    def module(self, file: str) -> ModuleAst:
        return self.units[file].module

    def clause(self, ref_or_file, clause_key=None) -> Clause:
        if clause_key is None:
            ref = ref_or_file
            file, clause_key = ref.file, ref.clause_key
        else:
            file = ref_or_file
        fi, ci = clause_key
        return self.units[file].module.fundefs[fi].clauses[ci]

    def exprs(self, ref: InstanceRef) -> tuple[Expr, ...]:
        return self.clause(ref).body[ref.lo : ref.hi]

    def span(self, ref: InstanceRef) -> Span:
        span = self._spans.get(ref)
        if span is None:
            span = self._spans[ref] = cover_span(self.exprs(ref))
        return span

    def context(self, ref: InstanceRef) -> InstanceContext:
        ctx = self._contexts.get(ref)
        if ctx is None:
            unit = self.units[ref.file]
            ctx = self._contexts[ref] = InstanceContext(
                self.exprs(ref), unit.bindings, self.span(ref), unit.module.name
            )
        return ctx

    def token_range(self, ref: InstanceRef) -> tuple[int, int]:
        cached = self._tokens.get(ref)
        if cached is None:
            unit = self.units[ref.file]
            bounds = [
                b
                for b in unit.norm.bounds
                if b.clause_key == ref.clause_key and ref.lo <= b.expr_index < ref.hi
            ]
            cached = self._tokens[ref] = (bounds[0].token_lo, bounds[-1].token_hi)
        return cached

    def token_count(self, ref: InstanceRef) -> int:
        lo, hi = self.token_range(ref)
        return hi - lo

    def loc(self, ref: InstanceRef) -> int:
        span = self.span(ref)
        return span.end_line - span.start_line + 1

    def with_module(self, file: str, module: ModuleAst) -> "Project":
        """Project with one module replaced and re-printed (for refactorings)."""
        from clonewright.mel.printer import print_module

        texts = {f: u.text for f, u in self.units.items()}
        texts[file] = print_module(module)
        return Project.from_texts(texts)

    def texts(self) -> dict[str, str]:
        return {f: u.text for f, u in self.units.items()}


def _expand(paths) -> list[Path]:
    out: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(p.rglob("*.mel")))
        else:
            out.append(p)
    seen = set()
    unique = []
    for p in out:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique
