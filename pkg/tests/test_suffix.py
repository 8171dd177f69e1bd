"""Normalization, suffix-tree repeats (vs brute force), and candidate snapping."""

from __future__ import annotations

import random

from clonewright.config import Thresholds
from clonewright.mel import parse_module, tokenize
from clonewright.suffix import (
    FileNorm,
    build_index,
    candidates,
    maximal_repeats,
    normalize,
)


def norm_of(src: str, file: str) -> FileNorm:
    tokens = tokenize(src, file)
    module = parse_module(src, file)
    return FileNorm(file, [s for s in (normalize(tokens, module)).symbols],
                    normalize(tokens, module).bounds, tokens)


def raw_norm(symbols: list, file: str = "raw") -> FileNorm:
    return FileNorm(file, symbols, [], [])


def brute_maximal_repeats(seq: list) -> set:
    n = len(seq)
    occurrences: dict[tuple, list[int]] = {}
    for i in range(n):
        for j in range(i + 1, n + 1):
            occurrences.setdefault(tuple(seq[i : j]), []).append(i)
    out = set()
    for sub, starts in occurrences.items():
        if len(starts) < 2:
            continue
        lefts = {seq[s - 1] if s > 0 else None for s in starts}
        rights = {seq[s + len(sub)] if s + len(sub) < n else None for s in starts}
        if len(lefts) >= 2 and len(rights) >= 2:
            out.add((sub, tuple(sorted(starts))))
    return out


class TestNormalization:
    def test_structure_difference_survives(self):
        a = normalize(tokenize("-module(m). f(X) -> (X+3)+4.", "a"), parse_module("-module(m). f(X) -> (X+3)+4.", "a"))
        b = normalize(tokenize("-module(m). f(X) -> 4+(5-(3*X)).", "b"), parse_module("-module(m). f(X) -> 4+(5-(3*X)).", "b"))
        start_a = a.bounds[0].token_lo
        start_b = b.bounds[0].token_lo
        assert a.symbols[start_a:] != b.symbols[start_b:]

    def test_variable_names_erased(self):
        src1 = "-module(m). f(X, Y) -> wrap(X, Y, 12)."
        src2 = "-module(m). g(Prev, Next) -> wrap(Prev, Next, 99)."
        a = normalize(tokenize(src1, "a"), parse_module(src1, "a"))
        b = normalize(tokenize(src2, "b"), parse_module(src2, "b"))
        lo_a = a.bounds[0].token_lo
        lo_b = b.bounds[0].token_lo
        assert a.symbols[lo_a:] == b.symbols[lo_b:]

    def test_send_statement_normalizes_identically(self):
        src = """-module(m).

f(Msg, N) -> a ! {msg, Msg, N - 1}.

g(Other, M) -> a ! {msg, Other, M - 1}.
"""
        norm = normalize(tokenize(src, "m"), parse_module(src, "m"))
        b1, b2 = norm.bounds
        assert (
            norm.symbols[b1.token_lo : b1.token_hi]
            == norm.symbols[b2.token_lo : b2.token_hi]
        )

    def test_bounds_cover_top_level_expressions(self):
        src = "-module(m). f() ->\n  g(1),\n  h(2, 3)."
        norm = normalize(tokenize(src, "m"), parse_module(src, "m"))
        assert len(norm.bounds) == 2
        g, h = norm.bounds
        assert [t.lexeme for t in norm.tokens[g.token_lo : g.token_hi]] == ["g", "(", "1", ")"]
        assert [t.lexeme for t in norm.tokens[h.token_lo : h.token_hi]] == ["h", "(", "2", ",", "3", ")"]


class TestSuffixTree:
    def test_textbook_abab(self):
        index = build_index([raw_norm([("ATOM", "a"), ("ATOM", "b"), ("ATOM", "a"), ("ATOM", "b")])])
        repeats = maximal_repeats(index)
        assert len(repeats) == 1
        assert repeats[0].length == 2
        assert repeats[0].starts == (0, 2)

    def test_empty_input(self):
        assert maximal_repeats(build_index([])) == []
        assert candidates(build_index([]), Thresholds()) == []

    def test_matches_brute_force_on_random_sequences(self):
        rng = random.Random(5)
        for trial in range(60):
            length = rng.randrange(2, 50)
            alphabet = rng.randrange(2, 5)
            syms = [("ATOM", str(rng.randrange(alphabet))) for _ in range(length)]
            index = build_index([raw_norm(syms)])
            got = {
                (tuple(index.seq[r.starts[0] : r.starts[0] + r.length]), r.starts)
                for r in maximal_repeats(index)
            }
            expected = brute_maximal_repeats(index.seq)
            assert got == expected, f"trial {trial}"

    def test_multi_file_brute_force(self):
        rng = random.Random(9)
        for trial in range(30):
            files = []
            for fi in range(rng.randrange(2, 4)):
                length = rng.randrange(1, 25)
                files.append(
                    raw_norm(
                        [("ATOM", str(rng.randrange(3))) for _ in range(length)],
                        file=f"f{fi}",
                    )
                )
            index = build_index(files)
            got = {
                (tuple(index.seq[r.starts[0] : r.starts[0] + r.length]), r.starts)
                for r in maximal_repeats(index)
            }
            assert got == brute_maximal_repeats(index.seq), f"trial {trial}"

    def test_cross_file_repeat_length_and_frequency(self):
        body = "R = prepare(Input, 4),\n  check(R, [1, 2, 3], {a, b}),\n  finish(R, Input, 77)"
        src1 = f"-module(m1).\n\nf(Input) ->\n  {body}.\n"
        src2 = f"-module(m2).\n\ng(Input) ->\n  {body}.\n"
        n1 = normalize(tokenize(src1, "m1.mel"), parse_module(src1, "m1.mel"))
        n2 = normalize(tokenize(src2, "m2.mel"), parse_module(src2, "m2.mel"))
        index = build_index([n1, n2])
        body_len = n1.bounds[-1].token_hi - n1.bounds[0].token_lo
        assert body_len >= 30
        # Brute-force longest-common-substring oracle across the two files.
        best = 0
        a, b = n1.symbols, n2.symbols
        for i in range(len(a)):
            for j in range(len(b)):
                k = 0
                while i + k < len(a) and j + k < len(b) and a[i + k] == b[j + k]:
                    k += 1
                best = max(best, k)
        crossing = [
            r
            for r in maximal_repeats(index)
            if len({_file_of(index, s) for s in r.starts}) == 2
        ]
        assert max(r.length for r in crossing) == best
        assert any(r.length >= body_len and len(r.starts) == 2 for r in crossing)


def _file_of(index, pos):
    best = None
    for f in index.files:
        if index.offsets[f] <= pos:
            best = f
    return best


class TestCandidates:
    def build(self, sources: dict[str, str]):
        norms = []
        for file, src in sources.items():
            norms.append(normalize(tokenize(src, file), parse_module(src, file)))
        return build_index(norms)

    def test_sixteen_fold_literal_repeat(self):
        body = "SetResult = import_file(rules, no),\n  trial(ok, SetResult),\n  Amount = ruleset_count(),\n  om_check(Amount, size)"
        funs = "\n\n".join(f"t{i}() ->\n  {body}." for i in range(16))
        index = self.build({"suite.mel": f"-module(suite).\n\n{funs}\n"})
        found = candidates(index, Thresholds(min_len=4, min_toks=10))
        full = [c for c in found if c.members[0].expr_hi - c.members[0].expr_lo == 4]
        assert len(full) == 1
        assert full[0].frequency == 16

    def test_unique_expressions_no_candidates(self):
        src = "-module(m).\n\nf() ->\n  alpha(1),\n  beta({x}),\n  gamma([2, 3]).\n"
        index = self.build({"m.mel": src})
        assert candidates(index, Thresholds(min_len=1, min_toks=0)) == []

    def test_members_do_not_overlap(self):
        # aaaa-style repetition inside one body: overlapping occurrences
        # collapse to non-overlapping members, earlier span first.
        src = "-module(m). f() ->\n  ping(1),\n  ping(2),\n  ping(3),\n  ping(4)."
        index = self.build({"m.mel": src})
        for cand in candidates(index, Thresholds(min_len=1, min_toks=0)):
            spans = [(m.token_lo, m.token_hi) for m in cand.members]
            for (al, ah), (bl, bh) in zip(spans, spans[1:]):
                assert ah <= bl

    def test_snaps_inward_to_whole_expressions(self):
        src = """-module(m).

f(X) ->
  setup(X, 1),
  work(X, alpha),
  teardown(X).

g(Y) ->
  setup(Y, 1),
  work(Y, beta),
  cleanup(Y).
"""
        index = self.build({"m.mel": src})
        found = candidates(index, Thresholds(min_len=1, min_toks=0))
        # The shared region covers setup(...) wholly but breaks inside
        # work(...) at the differing atom, so candidates snap to the
        # one-expression sequence.
        assert any(
            c.members[0].expr_hi - c.members[0].expr_lo == 1 and c.frequency == 2
            for c in found
        )
        for c in found:
            for m in c.members:
                assert m.expr_hi > m.expr_lo
