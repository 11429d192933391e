"""Shared helpers: seeded random formulas, states, and mutability indexes."""

from __future__ import annotations

import itertools
import random

import pytest

from introplan.domain import RelState
from introplan.fol import (
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
)
from introplan.mutation import MutabilityIndex

# Small vocabulary: at most 12 ground literals over three constants.
PRED_A = PredicateDecl("A", 1)
PRED_B = PredicateDecl("B", 2)
VOCAB = (PRED_A, PRED_B)


def make_constants(n):
    return tuple(Const(f"c{i + 1}") for i in range(n))


def ground_atoms(constants):
    atoms = [Literal(PRED_A, (c,)) for c in constants]
    atoms += [Literal(PRED_B, (x, y)) for x in constants for y in constants]
    return atoms


def random_state(rng: random.Random, constants) -> RelState:
    facts = [lit for lit in ground_atoms(constants) if rng.random() < 0.4]
    return RelState(frozenset(constants), frozenset(facts))


def random_mutability(rng: random.Random) -> MutabilityIndex:
    addable = frozenset(p.name for p in VOCAB if rng.random() < 0.6)
    deletable = frozenset(p.name for p in VOCAB if rng.random() < 0.6)
    return MutabilityIndex(addable, deletable, {})


def random_formula(rng: random.Random, constants, max_depth: int):
    """A closed random formula over the vocabulary, quantifier-safe by
    construction (every quantifier introduces a fresh variable)."""
    counter = itertools.count()

    def term(scope):
        if scope and rng.random() < 0.5:
            return rng.choice(scope)
        return rng.choice(constants)

    def leaf(scope):
        pred = rng.choice(VOCAB)
        return Lit(Literal(pred, tuple(term(scope) for _ in range(pred.arity))))

    def build(depth, scope):
        if depth <= 0:
            return leaf(scope)
        kind = rng.choice(("lit", "and", "or", "not", "exists", "forall"))
        if kind == "lit":
            return leaf(scope)
        if kind in ("and", "or"):
            children = tuple(
                build(depth - 1, scope) for _ in range(rng.randint(2, 3))
            )
            return And(children) if kind == "and" else Or(children)
        if kind == "not":
            return Not(build(depth - 1, scope))
        var = Var(f"v{next(counter)}")
        child = build(depth - 1, scope + (var,))
        return Exists(var, child) if kind == "exists" else Forall(var, child)

    return build(max_depth, ())


def legal_variants(state: RelState, idx: MutabilityIndex):
    """All states differing from ``state`` only on literals mutable in the
    direction of the change (the reachable-abstraction of the brute force)."""
    options = []
    for lit in ground_atoms(sorted(state.constants, key=lambda c: c.name)):
        current = lit in state.facts
        values = {current}
        if idx.can_become_true(lit.pred.name):
            values.add(True)
        if idx.can_become_false(lit.pred.name):
            values.add(False)
        options.append((lit, sorted(values)))
    for combo in itertools.product(*[vals for _, vals in options]):
        facts = frozenset(lit for (lit, _), on in zip(options, combo) if on)
        yield RelState(state.constants, facts)


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
