"""Least-general generalization: worked examples, rules, and oracle properties."""

from __future__ import annotations

import itertools
import random
import time

from clonewright.antiunify import (
    InstanceContext,
    alpha_equal,
    anti_unify_class,
    anti_unify_pair,
    apply_substitution,
    canonical_text,
    new_param_count,
    similarity,
    template_as_fundef,
)
from clonewright.mel import parse_module, print_expr
from clonewright.mel.parser import parse_body_text, parse_expr_text
from clonewright.mel.syntax import Expr

from helpers import body_contexts, module_context


def au_pair_texts(a: str, b: str):
    return anti_unify_pair(parse_body_text(a), parse_body_text(b))


class TestWorkedExample:
    def test_add_example(self):
        result = au_pair_texts("(X+3)+4", "4+(5-(3*X))")
        assert result is not None
        template, s1, s2 = result
        assert canonical_text(template) == "P0 + P1"
        assert template.free_params == ()
        assert [print_expr(s1[p]) for p in template.new_params] == ["X + 3", "4"]
        assert [print_expr(s2[p]) for p in template.new_params] == ["4", "5 - 3 * X"]

    def test_add_example_is_fast(self):
        started = time.perf_counter()
        au_pair_texts("(X+3)+4", "4+(5-(3*X))")
        assert time.perf_counter() - started < 0.001

    def test_identity(self):
        e = parse_body_text("{ok, f(1, X)}")
        result = anti_unify_pair(e, e)
        template, s1, s2 = result
        assert template.body == e
        assert template.new_params == ()
        assert all(v.value == k for k, v in s1.items())
        assert all(v.value == k for k, v in s2.items())

    def test_ping_pong_bodies(self):
        src = """-module(p).

pong_loop(Msg, N) ->
  io:format("pong!~n"),
  timer:sleep(500),
  a ! {msg, Msg, N - 1}.

ping_loop(Msg, N) ->
  io:format("ping...~n"),
  timer:sleep(500),
  b ! {msg, Msg, N - 1}.
"""
        a, b = body_contexts(src)
        result = anti_unify_pair(a.exprs, b.exprs, (a, b))
        assert result is not None
        template, s1, s2 = result
        assert template.free_params == ("Msg", "N")
        assert template.new_params == ("NewVar_1", "NewVar_2")
        rendered = ", ".join(print_expr(e) for e in template.body)
        assert rendered == (
            "io:format(NewVar_1), timer:sleep(500), NewVar_2 ! {msg, Msg, N - 1}"
        )
        assert print_expr(s1["NewVar_1"]) == '"pong!~n"'
        assert print_expr(s2["NewVar_1"]) == '"ping...~n"'
        assert print_expr(s1["NewVar_2"]) == "a"
        assert print_expr(s2["NewVar_2"]) == "b"


class TestClassGeneralization:
    def test_sixteen_identical_instances(self):
        body = "-module(m).\n\n" + "\n\n".join(
            f"t{i}() ->\n  R = setup(4),\n  check(R, 7),\n  done(R)." for i in range(16)
        )
        contexts = body_contexts(body)
        result = anti_unify_class(contexts)
        assert result is not None
        assert new_param_count(result.template) == 0
        assert similarity(result.template, contexts) == 1.0

    def test_merging_equal_difference_pairs(self):
        # Five difference sites; two of them carry the identical (a, b) pair.
        a = module_context(
            "-module(m). f() -> g(1, x, x, 2, 9), h(3)."
        )
        b = module_context(
            "-module(m). f() -> g(8, y, y, 5, 9), h(6).", file="m2.mel"
        )
        result = anti_unify_pair(a.exprs, b.exprs, (a, b))
        template, s1, s2 = result
        assert new_param_count(template) == 4

    def test_pattern_mismatch_fails_whole_class(self):
        src = """-module(m).

t1(S) ->
  {ok, V} = take(S),
  use(V).

t2(S) ->
  {ok, V} = take(S),
  use(V).

t3(S) ->
  {err, V} = take(S),
  use(V).
"""
        c1, c2, c3 = body_contexts(src)
        assert anti_unify_class([c1, c2]) is not None
        assert anti_unify_class([c1, c2, c3]) is None

    def test_fold_order_independence(self):
        rng = random.Random(7)
        atoms = ["a", "b", "c"]
        for _ in range(40):
            variants = []
            for i in range(3):
                x, y = rng.choice(atoms), rng.choice(atoms)
                n1, n2 = rng.randrange(3), rng.randrange(3)
                variants.append(
                    f"t{i}(K) ->\n  R = g({x}, {n1}),\n  send(K, {y}),\n  wrap(R, {n2})."
                )
            src = "-module(m).\n\n" + "\n\n".join(variants)
            contexts = body_contexts(src)
            results = []
            for perm in itertools.permutations(contexts):
                r = anti_unify_class(list(perm))
                assert r is not None
                results.append(r.template)
            first = results[0]
            for other in results[1:]:
                assert alpha_equal(
                    template_as_fundef(first), template_as_fundef(other)
                ), (canonical_text(first, True), canonical_text(other, True))


class TestBindingRules:
    def test_local_variables_correspond_positionally(self):
        a = module_context("-module(m). f() -> X = 1, Y = 2, out(X, Y).")
        b = module_context("-module(m). f() -> A = 1, B = 2, out(A, B).", file="m2.mel")
        result = anti_unify_pair(a.exprs, b.exprs, (a, b))
        assert result is not None
        template, _, _ = result
        assert new_param_count(template) == 0

    def test_crossed_local_uses_fail(self):
        a = module_context("-module(m). f() -> X = 1, Y = 2, out(X, Y).")
        b = module_context("-module(m). f() -> A = 1, B = 2, out(B, A).", file="m2.mel")
        assert anti_unify_pair(a.exprs, b.exprs, (a, b)) is None

    def test_local_versus_free_fails(self):
        a = module_context("-module(m). f() -> X = 1, use(X).")
        b = module_context("-module(m). f(Z) -> Y = 1, use(Z).", file="m2.mel")
        assert anti_unify_pair(a.exprs, b.exprs, (a, b)) is None

    def test_abstracting_a_definition_fails(self):
        a = module_context("-module(m). f() -> X = 1, use(X).")
        b = module_context("-module(m). f() -> g(2), use(7).", file="m2.mel")
        assert anti_unify_pair(a.exprs, b.exprs, (a, b)) is None

    def test_free_variables_abstract_to_shared_parameter(self):
        a = module_context("-module(m). f(Msg) -> send(Msg), log(Msg).")
        b = module_context("-module(m). f(Other) -> send(Other), log(Other).", file="m2.mel")
        result = anti_unify_pair(a.exprs, b.exprs, (a, b))
        template, s1, s2 = result
        assert template.free_params == ("Msg",)
        assert template.new_params == ()
        assert s2["Msg"].value == "Other"

    def test_inconsistent_free_mapping_splits_parameters(self):
        a = module_context("-module(m). f(X) -> g(X), h(X).")
        b = module_context("-module(m). f(Y, Z) -> g(Y), h(Z).", file="m2.mel")
        result = anti_unify_pair(a.exprs, b.exprs, (a, b))
        template, s1, s2 = result
        assert len(template.free_params) == 2
        assert new_param_count(template) == 0
        assert [s1[p].value for p in template.free_params] == ["X", "X"]
        assert [s2[p].value for p in template.free_params] == ["Y", "Z"]

    def test_callee_mismatch_abstracts_whole_call(self):
        result = au_pair_texts("wrap(f(1, 2))", "wrap(g(1, 2))")
        template, s1, s2 = result
        assert canonical_text(template) == "wrap(P0)"
        assert print_expr(s1["NewVar_1"]) == "f(1, 2)"

    def test_local_calls_in_different_modules_differ(self):
        a = module_context("-module(m1). f() -> init(), check(1, 2).")
        b = module_context("-module(m2). f() -> init(), check(1, 2).")
        result = anti_unify_pair(a.exprs, b.exprs, (a, b))
        # Same surface text, but init/0 and check/2 resolve per module, so
        # both calls are abstracted whole; nothing concrete remains.
        assert result is None

    def test_remote_call_into_own_module_unifies_with_local(self):
        src = """-module(m1).

f() ->
  m1:check(1),
  done(ok).

g() ->
  check(1),
  done(ok).
"""
        c1, c2 = body_contexts(src)
        result = anti_unify_pair(c1.exprs, c2.exprs, (c1, c2))
        assert result is not None
        assert new_param_count(result[0]) == 0

    def test_rigid_pattern_literal(self):
        a = module_context("-module(m). f(V, X) -> {V, result_list, X} = get(), ok.")
        b = module_context("-module(m). f(V, X) -> {V, other_list, X} = get(), ok.", file="m2.mel")
        assert anti_unify_pair(a.exprs, b.exprs, (a, b)) is None

    def test_trivial_all_placeholder_rejected(self):
        assert au_pair_texts("f(1)", "g(2)") is None
        assert au_pair_texts("1", "2") is None


class TestSimilarity:
    def test_identical_score_one(self):
        e = parse_body_text("f(X, 1)")
        template, _, _ = anti_unify_pair(e, e)
        assert similarity(template, [e, e]) == 1.0

    def test_hand_counted_ratio(self):
        result = au_pair_texts("(X+3)+4", "4+(5-(3*X))")
        template, _, _ = result
        a = parse_body_text("(X+3)+4")
        b = parse_body_text("4+(5-(3*X))")
        assert similarity(template, [a, a]) == 0.6
        assert similarity(template, [a, b]) == 3 / 7

    def test_new_param_counts(self):
        result = au_pair_texts("(X+3)+4", "4+(5-(3*X))")
        assert new_param_count(result[0]) == 2


class TestInstantiation:
    def test_soundness_on_random_pairs(self):
        from genast import AstGen, mutate_module
        from clonewright.mel import annotate_bindings, print_module
        from clonewright.mel.syntax import cover_span

        rng = random.Random(11)
        checked = 0
        for _ in range(120):
            base = AstGen(rng).module(nfuns=1)
            m1 = parse_module(print_module(base), "a.mel")
            m2 = parse_module(print_module(mutate_module(m1, rng)), "b.mel")
            a = m1.fundefs[0].clauses[0].body
            b = m2.fundefs[0].clauses[0].body
            ctx_a = InstanceContext(a, annotate_bindings(m1), cover_span(a), m1.name)
            ctx_b = InstanceContext(b, annotate_bindings(m2), cover_span(b), m2.name)
            result = anti_unify_pair(a, b, (ctx_a, ctx_b))
            if result is None:
                continue
            template, s1, s2 = result
            checked += 1
            applied_a = apply_substitution(template.body, s1, freshen_locals=True)
            applied_b = apply_substitution(template.body, s2, freshen_locals=True)
            assert alpha_equal(applied_a, a)
            assert alpha_equal(applied_b, b)
        assert checked > 60

    def test_closure_reduction(self):
        body = parse_body_text("use(P())")
        closure = parse_expr_text("fun() -> dangerous(1) end")
        out = apply_substitution(body, {"P": closure})
        assert print_expr(out[0]) == "use(dangerous(1))"


class TestLggOracle:
    """anti_unify_pair matches brute-force least-general generalization
    on all ground expression pairs of at most 7 nodes over a 3-symbol
    alphabet (atoms a, b and the binary constructor f)."""

    def build_trees(self, max_nodes: int):
        leaves = [Expr("atom", "a"), Expr("atom", "b")]
        by_size = {1: list(leaves)}
        for size in range(3, max_nodes + 1, 2):
            by_size[size] = []
            for left_size in range(1, size - 1, 2):
                right_size = size - 1 - left_size
                for l in by_size.get(left_size, []):
                    for r in by_size.get(right_size, []):
                        by_size[size].append(Expr("call", "f", (l, r)))
        out = []
        for trees in by_size.values():
            out.extend(trees)
        return out

    def oracle_lgg(self, a: Expr, b: Expr, memo: dict, counter: list) -> Expr:
        if a == b:
            return a
        if a.kind == b.kind == "call" and a.value == b.value and len(a.children) == len(b.children):
            return Expr(
                "call",
                a.value,
                tuple(
                    self.oracle_lgg(x, y, memo, counter)
                    for x, y in zip(a.children, b.children)
                ),
            )
        key = (a, b)
        if key not in memo:
            counter[0] += 1
            memo[key] = Expr("var", f"Z{counter[0]}")
        return memo[key]

    def test_matches_oracle(self):
        trees = self.build_trees(7)
        assert len(trees) == 102
        for a in trees:
            for b in trees:
                expected = self.oracle_lgg(a, b, {}, [0])
                got = anti_unify_pair((a,), (b,))
                if expected.kind == "var":
                    assert got is None
                    continue
                assert got is not None
                from clonewright.antiunify import Template

                zvars = tuple(
                    dict.fromkeys(
                        n.value for n in expected.walk() if n.kind == "var"
                    )
                )
                oracle_template = Template((), zvars, (expected,))
                assert canonical_text(got[0]) == canonical_text(oracle_template)
