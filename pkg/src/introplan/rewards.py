"""Reward and termination models as first-order decision lists.

A decision list is an ordered sequence of (guard formula, value) clauses
evaluated first-match over a transition (s, a, s').  The ``eval_over`` flag
selects whether state literals in the guards read the prior state or the
next state; action atoms always bind to the transition's action.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Callable, Iterable

from .errors import MalformedFormulaError
from .fol import (
    And,
    Const,
    Formula,
    Not,
    TrueConst,
    compile_ground_evaluator,
    evaluate,
)

if TYPE_CHECKING:
    from .domain import GroundAction, RelState


class TerminationValue(enum.IntEnum):
    """Episode outcome of a transition: failure, continue, or success."""

    FAILURE = -1
    CONTINUE = 0
    SUCCESS = 1


class EvalOver(enum.Enum):
    """Which transition state binds the state literals of a decision list."""

    PRIOR_STATE = "prior"
    NEXT_STATE = "next"


@dataclass(frozen=True)
class DecisionList:
    """Ordered (guard, value) clauses; the last guard must be ``true``."""

    clauses: tuple[tuple[Formula, Fraction], ...]
    eval_over: EvalOver = EvalOver.NEXT_STATE

    def __post_init__(self) -> None:
        if not self.clauses:
            raise MalformedFormulaError("decision list needs at least one clause")
        if not isinstance(self.clauses[-1][0], TrueConst):
            raise MalformedFormulaError("last decision-list guard must be 'true'")

    @property
    def r_max(self) -> Fraction:
        return max(v for _, v in self.clauses)


def _pick_state(dl: DecisionList, s: RelState, s2: RelState) -> RelState:
    return s if dl.eval_over is EvalOver.PRIOR_STATE else s2


def evaluate_reward(dl: DecisionList, s: RelState, a: GroundAction, s2: RelState) -> Fraction:
    """Value of the first clause whose guard holds on the transition (s, a, s2)."""
    target = _pick_state(dl, s, s2)
    for guard, value in dl.clauses:
        if evaluate(guard, target, action=a):
            return value
    raise AssertionError("decision list is total by construction")


def evaluate_termination(
    dl: DecisionList, s: RelState, a: GroundAction, s2: RelState
) -> TerminationValue:
    """As :func:`evaluate_reward`, with values restricted to {-1, 0, +1}."""
    return TerminationValue(int(evaluate_reward(dl, s, a, s2)))


def extract_maximal_reward_condition(dl: DecisionList) -> Formula:
    """The single formula whose satisfaction forces the maximal clause value.

    With i the first index attaining the maximum, that is the conjunction of
    the negated earlier guards with guard i; for i = 0 the guard is returned
    unwrapped.
    """
    values = [v for _, v in dl.clauses]
    i = values.index(max(values))
    if i == 0:
        return dl.clauses[0][0]
    parts: list[Formula] = [Not(g) for g, _ in dl.clauses[:i]]
    parts.append(dl.clauses[i][0])
    return And(tuple(parts))


CompiledDecisionList = Callable[[frozenset, frozenset, object], Fraction]


def compile_decision_list(
    dl: DecisionList, constants: Iterable[Const]
) -> CompiledDecisionList:
    """Precompile all guards for one constant set.

    The result takes (prior facts, next facts, action) and returns the value
    of the first matching clause; equivalent to :func:`evaluate_reward`.
    """
    compiled = tuple(
        (compile_ground_evaluator(guard, constants), value)
        for guard, value in dl.clauses
    )
    over_prior = dl.eval_over is EvalOver.PRIOR_STATE

    def run(facts_prior: frozenset, facts_next: frozenset, action) -> Fraction:
        facts = facts_prior if over_prior else facts_next
        for guard_fn, value in compiled:
            if guard_fn(facts, action):
                return value
        raise AssertionError("decision list is total by construction")

    return run
