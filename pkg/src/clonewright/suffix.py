"""Phase one of detection: normalized token streams and repeated regions.

Variables, integer literals and string literals erase to their class;
atoms, operators, keywords and punctuation keep their lexeme. Repeated
normalized regions are found with a generalized suffix tree (Ukkonen) over
all files, then snapped inward to whole top-level body expressions to form
clone candidates. Candidates over-approximate: verification is the
detector's job.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

from clonewright.config import Thresholds
from clonewright.mel.syntax import ModuleAst
from clonewright.mel.tokens import Token

Symbol = tuple  # ('VAR',) ('INT',) ('STR',) ('ATOM', lex) ('OP', lex) ('PUNCT', lex) ('KW', lex)

_ERASED = {"variable": ("VAR",), "integer": ("INT",), "string": ("STR",)}
_KEPT = {"atom": "ATOM", "operator": "OP", "punct": "PUNCT", "keyword": "KW"}


def normalize_token(tok: Token) -> Symbol:
    erased = _ERASED.get(tok.kind)
    if erased is not None:
        return erased
    return (_KEPT[tok.kind], tok.lexeme)


@dataclass(frozen=True)
class ExprBound:
    """Token interval of one top-level body expression."""

    clause_key: tuple[int, int]
    expr_index: int
    token_lo: int
    token_hi: int


@dataclass
class FileNorm:
    file: str
    symbols: list[Symbol]
    bounds: list[ExprBound]  # ordered by token_lo
    tokens: list[Token]


def normalize(tokens: list[Token], module: ModuleAst) -> FileNorm:
    """Normalized symbol stream plus the expression boundary index."""
    symbols = [normalize_token(t) for t in tokens]
    starts = [t.span.start for t in tokens]
    bounds: list[ExprBound] = []
    for fi, fd in enumerate(module.fundefs):
        for ci, clause in enumerate(fd.clauses):
            for ei, expr in enumerate(clause.body):
                lo = bisect_left(starts, expr.span.start)
                hi = bisect_left(starts, expr.span.end)
                bounds.append(ExprBound((fi, ci), ei, lo, hi))
    bounds.sort(key=lambda b: b.token_lo)
    return FileNorm(module.file, symbols, bounds, tokens)


# -- generalized suffix tree (Ukkonen) -------------------------------------


class _Tree:
    """Ukkonen construction over an integer sequence."""

    INF = 1 << 60

    def __init__(self, seq: list[int]):
        self.seq = seq
        self.children: list[dict[int, int]] = [{}]
        self.start = [-1]
        self.end = [-1]
        self.slink = [0]
        self.active_node = 0
        self.active_edge = 0
        self.active_len = 0
        self.remainder = 0
        for pos in range(len(seq)):
            self._extend(pos)

    def _new_node(self, start: int, end: int) -> int:
        self.children.append({})
        self.start.append(start)
        self.end.append(end)
        self.slink.append(0)
        return len(self.start) - 1

    def _edge_length(self, node: int, pos: int) -> int:
        end = self.end[node]
        return min(end, pos + 1) - self.start[node]

    def _extend(self, pos: int) -> None:
        seq = self.seq
        current = seq[pos]
        self.remainder += 1
        last_internal = 0
        while self.remainder > 0:
            if self.active_len == 0:
                self.active_edge = pos
            edge_head = seq[self.active_edge]
            child = self.children[self.active_node].get(edge_head)
            if child is None:
                leaf = self._new_node(pos, self.INF)
                self.children[self.active_node][edge_head] = leaf
                if last_internal:
                    self.slink[last_internal] = self.active_node
                    last_internal = 0
            else:
                edge_len = self._edge_length(child, pos)
                if self.active_len >= edge_len:
                    self.active_node = child
                    self.active_edge += edge_len
                    self.active_len -= edge_len
                    continue
                if seq[self.start[child] + self.active_len] == current:
                    self.active_len += 1
                    if last_internal:
                        self.slink[last_internal] = self.active_node
                    break
                split = self._new_node(
                    self.start[child], self.start[child] + self.active_len
                )
                self.children[self.active_node][edge_head] = split
                leaf = self._new_node(pos, self.INF)
                self.children[split][current] = leaf
                self.start[child] += self.active_len
                self.children[split][seq[self.start[child]]] = child
                if last_internal:
                    self.slink[last_internal] = split
                last_internal = split
            self.remainder -= 1
            if self.active_node == 0 and self.active_len > 0:
                self.active_len -= 1
                self.active_edge = pos - self.remainder + 1
            elif self.active_node != 0:
                self.active_node = self.slink[self.active_node]


@dataclass(frozen=True)
class Repeat:
    length: int
    starts: tuple[int, ...]  # global symbol positions, sorted


@dataclass
class SuffixIndex:
    files: list[str]
    norms: dict[str, FileNorm]
    seq: list[int] = field(default_factory=list)
    offsets: dict[str, int] = field(default_factory=dict)
    tree: _Tree | None = None


def build_index(norms: list[FileNorm]) -> SuffixIndex:
    """Concatenate per-file streams with unique sentinels and build the tree."""
    codes: dict[Symbol, int] = {}
    seq: list[int] = []
    offsets: dict[str, int] = {}
    sentinel = 0
    for norm in norms:
        offsets[norm.file] = len(seq)
        for sym in norm.symbols:
            code = codes.get(sym)
            if code is None:
                code = len(codes) + 1
                codes[sym] = code
            seq.append(code)
        sentinel -= 1
        seq.append(sentinel)
    index = SuffixIndex([n.file for n in norms], {n.file: n for n in norms}, seq, offsets)
    index.tree = _Tree(seq) if seq else None
    return index


def maximal_repeats(index: SuffixIndex, min_freq: int = 2) -> list[Repeat]:
    """Left-diverse internal nodes: every maximal repeated substring."""
    tree = index.tree
    if tree is None:
        return []
    seq = index.seq
    n = len(seq)
    out: list[Repeat] = []

    # Iterative post-order: collect leaf suffix starts under every node.
    stack: list[tuple[int, int, list, list]] = [(0, 0, list(tree.children[0].values()), [])]
    while stack:
        node, depth, pending, starts = stack[-1]
        if pending:
            child = pending.pop()
            edge_len = min(tree.end[child], n) - tree.start[child]
            if not tree.children[child]:  # leaf
                starts.append(n - (depth + edge_len))
            else:
                stack.append(
                    (child, depth + edge_len, list(tree.children[child].values()), [])
                )
            continue
        stack.pop()
        if stack:
            stack[-1][3].extend(starts)
        if node == 0 or depth == 0:
            continue
        if len(starts) < min_freq:
            continue
        lefts = {seq[s - 1] if s > 0 else None for s in starts}
        if len(lefts) >= 2:
            out.append(Repeat(depth, tuple(sorted(starts))))
    out.sort(key=lambda r: (-r.length, r.starts))
    return out


# -- candidates -------------------------------------------------------------


@dataclass(frozen=True)
class CandidateMember:
    file: str
    clause_key: tuple[int, int]
    expr_lo: int
    expr_hi: int  # exclusive
    token_lo: int
    token_hi: int


@dataclass
class CandidateClass:
    members: list[CandidateMember]
    norm_len: int  # tokens
    frequency: int


def candidates(index: SuffixIndex, thresholds: Thresholds) -> list[CandidateClass]:
    """Snap repeats inward to whole top-level expressions and group them.

    Members of one candidate share a normalized symbol sequence and do not
    overlap each other; candidates satisfy the size OR-gate and min_freq.
    """
    grouped: dict[tuple, dict[tuple, CandidateMember]] = {}
    file_ends = {
        f: index.offsets[f] + len(index.norms[f].symbols) for f in index.files
    }
    for repeat in maximal_repeats(index, min_freq=2):
        for start in repeat.starts:
            file = _file_of(index, start)
            base = index.offsets[file]
            lo = start - base
            hi = min(start + repeat.length - base, file_ends[file] - base)
            for member in _snap(index.norms[file], lo, hi):
                key = _member_symbols(index.norms[file], member)
                grouped.setdefault(key, {})[
                    (member.file, member.clause_key, member.expr_lo, member.expr_hi)
                ] = member
    out: list[CandidateClass] = []
    seen: set[tuple] = set()
    for key, members_by_span in grouped.items():
        members = sorted(
            members_by_span.values(), key=lambda m: (m.file, m.token_lo, m.token_hi)
        )
        members = _drop_overlaps(members)
        if len(members) < max(2, thresholds.min_freq):
            continue
        span_key = tuple(
            (m.file, m.clause_key, m.expr_lo, m.expr_hi) for m in members
        )
        if span_key in seen:
            continue
        seen.add(span_key)
        expr_count = members[0].expr_hi - members[0].expr_lo
        token_count = members[0].token_hi - members[0].token_lo
        if not (expr_count >= thresholds.min_len or token_count >= thresholds.min_toks):
            continue
        out.append(CandidateClass(members, token_count, len(members)))
    out.sort(key=lambda c: (c.members[0].file, c.members[0].token_lo, -c.norm_len))
    return out


def _file_of(index: SuffixIndex, pos: int) -> str:
    best = None
    for f in index.files:
        if index.offsets[f] <= pos:
            best = f
        else:
            break
    return best


def _snap(norm: FileNorm, lo: int, hi: int):
    """Maximal runs of whole top-level expressions inside a token interval."""
    inside = [
        b for b in norm.bounds if b.token_lo >= lo and b.token_hi <= hi
    ]
    runs: list[list[ExprBound]] = []
    for bound in inside:
        if (
            runs
            and runs[-1][-1].clause_key == bound.clause_key
            and runs[-1][-1].expr_index + 1 == bound.expr_index
        ):
            runs[-1].append(bound)
        else:
            runs.append([bound])
    for run in runs:
        yield CandidateMember(
            norm.file,
            run[0].clause_key,
            run[0].expr_index,
            run[-1].expr_index + 1,
            run[0].token_lo,
            run[-1].token_hi,
        )


def _member_symbols(norm: FileNorm, member: CandidateMember) -> tuple:
    return tuple(norm.symbols[member.token_lo : member.token_hi])


def _drop_overlaps(members: list[CandidateMember]) -> list[CandidateMember]:
    kept: list[CandidateMember] = []
    for m in members:
        if any(
            k.file == m.file and k.token_lo < m.token_hi and m.token_lo < k.token_hi
            for k in kept
        ):
            continue
        kept.append(m)
    return kept
