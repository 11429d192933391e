"""Formula construction, substitution, evaluation, and the textual syntax."""

import random

import pytest

from introplan.domain import RelState
from introplan.errors import (
    MalformedBindingError,
    MalformedFormulaError,
    MissingActionContextError,
)
from introplan.fol import (
    TRUE,
    ActionAtom,
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
    compile_ground_evaluator,
    evaluate,
    free_variables,
    substitute,
)
from introplan.sexpr import format_formula, parse_formula

from conftest import make_constants, random_formula, random_state

On = PredicateDecl("On", 2)
OnTable = PredicateDecl("OnTable", 1)
X = Var("X")
Y = Var("Y")
a, b, c, d = (Const(n) for n in "abcd")


@pytest.fixture
def two_stack_state():
    """One two-block stack (a on d) plus b and c on the table."""
    Clear = PredicateDecl("Clear", 1)
    HandEmpty = PredicateDecl("HandEmpty", 0)
    facts = {
        On(a, d), OnTable(b), OnTable(c), OnTable(d),
        Clear(a), Clear(b), Clear(c), HandEmpty(),
    }
    return RelState({a, b, c, d}, facts)


def test_literal_arity_checked():
    with pytest.raises(MalformedFormulaError):
        Literal(On, (a,))


def test_evaluate_ground_literal(two_stack_state):
    assert evaluate(Lit(On(a, d)), two_stack_state)
    assert not evaluate(Lit(On(d, a)), two_stack_state)


def test_evaluate_forall(two_stack_state):
    assert not evaluate(Forall(X, Lit(OnTable(X))), two_stack_state)
    assert evaluate(Exists(X, Lit(OnTable(X))), two_stack_state)


def test_evaluate_true_constant(two_stack_state):
    assert evaluate(TRUE, two_stack_state)


def test_empty_connectives_forbidden():
    with pytest.raises(MalformedFormulaError):
        And(())
    with pytest.raises(MalformedFormulaError):
        Or(())


def test_empty_constant_set_quantifiers():
    empty = RelState(frozenset(), frozenset())
    assert evaluate(Forall(X, Lit(OnTable(X))), empty)
    assert not evaluate(Exists(X, Lit(OnTable(X))), empty)


def test_unbound_variable_rejected(two_stack_state):
    with pytest.raises(MalformedFormulaError):
        evaluate(Lit(OnTable(X)), two_stack_state)


def test_action_atom_needs_context(two_stack_state):
    atom = ActionAtom("Pick", (a,))
    with pytest.raises(MissingActionContextError):
        evaluate(atom, two_stack_state)


def test_action_atom_matches(two_stack_state):
    from introplan.envs import get_domain
    from introplan.domain import GroundAction

    schema = get_domain("blocks-world").schema("Pick")
    action = GroundAction(schema, (b,))
    assert evaluate(ActionAtom("Pick", (b,)), two_stack_state, action)
    assert not evaluate(ActionAtom("Pick", (c,)), two_stack_state, action)
    assert not evaluate(ActionAtom("Place", (b,)), two_stack_state, action)


def test_substitute_simple():
    f = Lit(OnTable(X))
    assert substitute(f, {X: a}) == Lit(OnTable(a))
    assert substitute(f, {}) is f


def test_substitute_under_quantifier():
    f = Exists(Y, Lit(On(X, Y)))
    assert substitute(f, {X: a}) == Exists(Y, Lit(On(a, Y)))


def test_substitute_bound_variable_rejected():
    f = Exists(Y, Lit(On(X, Y)))
    with pytest.raises(MalformedBindingError):
        substitute(f, {Y: a})


def test_quantifier_shadowing_rejected():
    with pytest.raises(MalformedFormulaError):
        Forall(X, Exists(X, Lit(OnTable(X))))


def test_free_variables():
    assert free_variables(Forall(X, Lit(OnTable(X)))) == frozenset()
    assert free_variables(Lit(On(X, Y))) == frozenset({X, Y})
    assert free_variables(Exists(X, Lit(On(X, Y)))) == frozenset({Y})


def test_negation_property(rng):
    constants = make_constants(3)
    for _ in range(150):
        f = random_formula(rng, constants, max_depth=4)
        s = random_state(rng, constants)
        assert evaluate(Not(f), s) == (not evaluate(f, s))


def test_quantifier_expansion_property(rng):
    constants = make_constants(3)
    for _ in range(100):
        inner = random_formula(rng, constants, max_depth=2)
        var = Var("q")
        s = random_state(rng, constants)
        # splice the fresh variable into the formula by wrapping a disjunct
        from conftest import PRED_A

        body = Or((Lit(Literal(PRED_A, (var,))), inner))
        forall = evaluate(Forall(var, body), s)
        exists = evaluate(Exists(var, body), s)
        expansion = [evaluate(substitute(body, {var: c}), s) for c in sorted(constants, key=str)]
        assert forall == all(expansion)
        assert exists == any(expansion)


def test_substitute_idempotent_for_total_binding(rng):
    constants = make_constants(2)
    for _ in range(100):
        f = random_formula(rng, constants, max_depth=3)
        binding = {v: constants[0] for v in free_variables(f)}
        once = substitute(f, binding)
        assert substitute(once, binding) == once


def test_compiled_evaluator_agrees(rng):
    constants = make_constants(3)
    for _ in range(150):
        f = random_formula(rng, constants, max_depth=3)
        s = random_state(rng, constants)
        fn = compile_ground_evaluator(f, constants)
        assert fn(s.facts, None) == evaluate(f, s)


def test_formula_round_trip(rng):
    constants = make_constants(3)
    for _ in range(100):
        f = random_formula(rng, constants, max_depth=3)
        assert parse_formula(format_formula(f)) == f


def test_parse_formula_examples():
    f = parse_formula("(forall ?X (or (not (lit OnTable ?X)) true))")
    assert isinstance(f, Forall)
    assert format_formula(f) == "(forall ?X (or (not (lit OnTable ?X)) true))"
    atom = parse_formula("(action CloseBin ?X)")
    assert atom == ActionAtom("CloseBin", (Var("X"),))
