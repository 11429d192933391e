"""The mutation engine: recursion cases, helper combinators, and the
soundness/completeness brute-force properties."""

import random

import pytest

from introplan.domain import RelState
from introplan.errors import MalformedFormulaError, MutationLimitError
from introplan.fol import (
    TRUE,
    And,
    Const,
    Exists,
    Forall,
    Lit,
    Literal,
    Not,
    Or,
    PredicateDecl,
    Var,
    evaluate,
)
from introplan.mutation import (
    CONTRADICTION,
    IMMUTABLY_VALID,
    MutabilityIndex,
    Mutation,
    dump_mutations,
    is_satisfied,
    mutate_false,
    mutate_true,
    satisfy_all,
    satisfy_any,
    satisfy_each,
)
from introplan.envs import get_domain, load_fixture
from introplan.rewards import extract_maximal_reward_condition

from conftest import (
    PRED_A,
    legal_variants,
    make_constants,
    random_formula,
    random_mutability,
    random_state,
)

X = Var("X")
c1, c2 = Const("c1"), Const("c2")
A = PRED_A


def mk(add=(), delete=(), schemas=None):
    return MutabilityIndex(frozenset(add), frozenset(delete), schemas or {})


def state(consts, facts):
    return RelState(frozenset(consts), frozenset(facts))


def test_literal_mutable_true():
    idx = mk(add=["A"])
    s = state([c1], [])
    assert mutate_true(s, Lit(A(c1)), idx) == (Mutation(make_true=(A(c1),)),)


def test_literal_immutably_valid():
    idx = mk()
    s = state([c1], [A(c1)])
    assert mutate_true(s, Lit(A(c1)), idx) == (IMMUTABLY_VALID,)


def test_literal_unsatisfiable():
    idx = mk()
    s = state([c1], [])
    assert mutate_true(s, Lit(A(c1)), idx) == ()


def test_literal_mutable_false():
    idx = mk(delete=["A"])
    s = state([c1], [A(c1)])
    assert mutate_false(s, Lit(A(c1)), idx) == (Mutation(make_false=(A(c1),)),)


def test_true_constant_cases():
    idx = mk()
    s = state([c1], [])
    assert mutate_true(s, TRUE, idx) == (IMMUTABLY_VALID,)
    assert mutate_false(s, TRUE, idx) == ()


def test_forall_products_to_single_mutation():
    idx = mk(add=["A"])
    s = state([c1, c2], [])
    out = mutate_true(s, Forall(X, Lit(A(X))), idx)
    assert out == (Mutation(make_true=(A(c1), A(c2))),)


def test_exists_unions_per_binding():
    idx = mk(add=["A"])
    s = state([c1, c2], [])
    out = mutate_true(s, Exists(X, Lit(A(X))), idx)
    assert out == (Mutation(make_true=(A(c1),)), Mutation(make_true=(A(c2),)))


def test_free_variable_rejected():
    idx = mk(add=["A"])
    s = state([c1], [])
    with pytest.raises(MalformedFormulaError):
        mutate_true(s, Lit(A(X)), idx)


def test_mutate_false_exists_with_deletable_predicate():
    # the mutable branch wins even for literals that are already false, so
    # falsifying the existential constrains every binding explicitly
    idx = mk(delete=["A"])
    s = state([c1, c2], [])
    out = mutate_false(s, Exists(X, Lit(A(X))), idx)
    assert out == (Mutation(make_false=(A(c1), A(c2))),)


def test_mutate_false_exists_collapses_to_valid_when_immutable():
    # with no way to make A true, the empty existential is immutably false
    idx = mk()
    s = state([c1, c2], [])
    assert mutate_false(s, Exists(X, Lit(A(X))), idx) == (IMMUTABLY_VALID,)


def test_satisfy_all_flattens():
    m1 = Mutation(make_true=(A(c1),))
    m2 = Mutation(make_true=(A(c2),))
    out = satisfy_all([m1, IMMUTABLY_VALID, m2])
    assert out == Mutation(make_true=(A(c1), A(c2)))


def test_satisfy_all_all_valid():
    assert satisfy_all([IMMUTABLY_VALID, IMMUTABLY_VALID]) is IMMUTABLY_VALID


def test_satisfy_all_contradiction():
    m1 = Mutation(make_true=(A(c1),))
    m2 = Mutation(make_false=(A(c1),))
    assert satisfy_all([m1, m2]) is CONTRADICTION


def test_satisfy_each_examples():
    ma, mb, mc = (Mutation(make_true=(A(c),)) for c in (c1, c2, Const("c3")))
    assert satisfy_each([[ma], [mb]]) == [satisfy_all([ma, mb])]
    assert satisfy_each([[ma], []]) == []
    two = satisfy_each([[ma, mb], [mc]])
    assert two == [satisfy_all([ma, mc]), satisfy_all([mb, mc])]


def test_satisfy_any_examples():
    ma = Mutation(make_true=(A(c1),))
    mb = Mutation(make_true=(A(c2),))
    assert satisfy_any([[ma], [mb]]) == [ma, mb]
    assert satisfy_any([[ma], [IMMUTABLY_VALID]]) == [IMMUTABLY_VALID]
    assert satisfy_any([[], []]) == []


def test_result_set_cap():
    # ten constants, two-level product over a wide disjunction
    consts = make_constants(10)
    idx = mk(add=["A", "B"])
    s = RelState(frozenset(consts), frozenset())
    from conftest import PRED_B

    wide = Forall(X, Exists(Var("Y"), Lit(Literal(PRED_B, (X, Var("Y"))))))
    with pytest.raises(MutationLimitError):
        mutate_true(s, wide, idx, limit=50)


def test_is_satisfied():
    m = Mutation(make_true=(A(c1),), make_false=(A(c2),))
    assert is_satisfied(m, state([c1, c2], [A(c1)]))
    assert not is_satisfied(m, state([c1, c2], [A(c1), A(c2)]))
    assert not is_satisfied(m, state([c1, c2], []))
    assert is_satisfied(IMMUTABLY_VALID, state([c1], []))


def test_is_satisfied_with_required_action():
    domain = get_domain("bins")
    from introplan.domain import GroundAction

    close = GroundAction(domain.schema("CloseBin"), (Const("b1"),))
    m = Mutation(required_action=close)
    s = state([Const("b1")], [])
    assert is_satisfied(m, s, close)
    assert not is_satisfied(m, s, None)
    other = GroundAction(domain.schema("CloseBin"), (Const("b2"),))
    assert not is_satisfied(m, state([Const("b1"), Const("b2")], []), other)


def test_blocks_fixture_mutation():
    domain, s = load_fixture("blocks_two_stacks.sexp")
    idx = MutabilityIndex.from_domain(domain)
    condition = extract_maximal_reward_condition(domain.reward)
    out = mutate_true(s, condition, idx)
    assert dump_mutations(out) == "+OnTable(a) +OnTable(b) +OnTable(c) +OnTable(d)"


def test_bins_fixture_mutations():
    domain, s = load_fixture("bins_2x2.sexp")
    idx = MutabilityIndex.from_domain(domain)
    condition = extract_maximal_reward_condition(domain.reward)
    out = mutate_true(s, condition, idx)
    assert dump_mutations(out) == (
        "-InBin(i1, b1) -InBin(i2, b1) @CloseBin(b1)\n"
        "-InBin(i1, b2) -InBin(i2, b2) @CloseBin(b2)"
    )


def test_immutable_guard_literals():
    domain, s = load_fixture("bins_2x2.sexp")
    idx = MutabilityIndex.from_domain(domain)
    IsItem = domain.predicate("IsItem")
    i1, b1 = Const("i1"), Const("b1")
    # true and immutable
    assert mutate_true(s, Lit(Literal(IsItem, (i1,))), idx) == (IMMUTABLY_VALID,)
    # false and immutable
    assert mutate_true(s, Lit(Literal(IsItem, (b1,))), idx) == ()


def test_duality_property(rng):
    constants = make_constants(3)
    for _ in range(200):
        f = random_formula(rng, constants, max_depth=3)
        s = random_state(rng, constants)
        idx = random_mutability(rng)
        assert mutate_false(s, f, idx) == mutate_true(s, Not(f), idx)


def test_immutably_valid_is_exclusive_and_true(rng):
    constants = make_constants(3)
    seen = 0
    for _ in range(300):
        f = random_formula(rng, constants, max_depth=3)
        s = random_state(rng, constants)
        idx = random_mutability(rng)
        out = mutate_true(s, f, idx)
        if IMMUTABLY_VALID in out:
            seen += 1
            assert out == (IMMUTABLY_VALID,)
            assert evaluate(f, s)
    assert seen > 10  # the branch must actually be exercised


def test_determinism(rng):
    constants = make_constants(3)
    for _ in range(50):
        f = random_formula(rng, constants, max_depth=3)
        s = random_state(rng, constants)
        idx = random_mutability(rng)
        assert mutate_true(s, f, idx) == mutate_true(s, f, idx)


def _apply_mutation(s: RelState, m):
    if m is IMMUTABLY_VALID:
        return s
    return RelState(s.constants, (s.facts | m.make_true) - m.make_false)


def test_soundness_and_completeness_sampled(rng):
    """Quick version of the full brute-force suite in the acceptance module."""
    for _ in range(60):
        n = rng.choice((1, 2, 2, 3))
        constants = make_constants(n)
        f = random_formula(rng, constants, max_depth=3)
        s = random_state(rng, constants)
        idx = random_mutability(rng)
        mutations = mutate_true(s, f, idx)
        for m in mutations:
            assert evaluate(f, _apply_mutation(s, m))
        for variant in legal_variants(s, idx):
            if evaluate(f, variant):
                assert any(is_satisfied(m, variant) for m in mutations)
