"""Deterministic MDP interface shared by all planners, plus the relational adapter.

``successors`` must be deterministic and order-stable, since every planner
relies on it for canonical tie-breaking.  A planner's ``nodes_expanded``
counts its ``successors`` calls, one per expansion.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .domain import DomainDef, GroundAction, RelState, grounding
from .rewards import TerminationValue, compile_decision_list

Transition = "tuple[object, object, Fraction, TerminationValue]"


class Mdp(abc.ABC):
    """A deterministic MDP: an initial state and a successor enumerator."""

    @property
    @abc.abstractmethod
    def initial_state(self):
        ...

    @abc.abstractmethod
    def successors(self, state) -> Sequence:
        """All transitions (action, next_state, reward, termination) from ``state``."""

    @property
    @abc.abstractmethod
    def r_max(self) -> Fraction:
        """The maximal reward value of the reward model."""

    @property
    def step_reward_floor(self):
        """The minimal per-step reward; used to pessimistically complete
        partial plans when ranking candidates (0 in penalty-free domains)."""
        return 0


@dataclass(frozen=True)
class Plan:
    """An action sequence with the return and termination status of its replay."""

    actions: tuple
    total_return: Fraction | int
    status: TerminationValue

    def __len__(self) -> int:
        return len(self.actions)


EMPTY_PLAN = Plan((), 0, TerminationValue.CONTINUE)


@dataclass
class SearchStats:
    """Benchmark currency: expansion count, wall time, and the plan found."""

    nodes_expanded: int
    wall_time: float
    plan: Plan
    budget_exhausted: bool = False
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SearchLimits:
    """Hard per-invocation caps; planners stop with partial stats when hit."""

    node_cap: int | None = None
    time_cap: float | None = None


NO_LIMITS = SearchLimits()


class RelationalMdp(Mdp):
    """MDP over relational states driven by a domain definition.

    Grounding and guard compilation are deferred to the first ``successors``
    call so that all instance-specific precomputation lands inside the
    caller's (timed) planning phase.
    """

    def __init__(self, domain: DomainDef, initial_state: RelState):
        self.domain = domain
        self._initial = initial_state
        self._grounded = None
        self._reward_fn = None
        self._termination_fn = None

    @property
    def initial_state(self) -> RelState:
        return self._initial

    @property
    def r_max(self) -> Fraction:
        return self.domain.reward.r_max

    @property
    def step_reward_floor(self):
        return min(Fraction(0), min(v for _, v in self.domain.reward.clauses))

    def _prepare(self) -> None:
        constants = self._initial.constants
        self._grounded = grounding(self.domain, constants)
        self._reward_fn = compile_decision_list(self.domain.reward, constants)
        self._termination_fn = compile_decision_list(self.domain.termination, constants)

    def successors(self, state: RelState) -> list:
        if self._grounded is None:
            self._prepare()
        reward_fn = self._reward_fn
        termination_fn = self._termination_fn
        facts = state.facts
        constants = state.constants
        out = []
        for e in self._grounded.applicable_entries(state):
            facts2 = (facts - e.delete) | e.add
            s2 = RelState._unchecked(constants, facts2)
            r = reward_fn(facts, facts2, e.action)
            c = termination_fn(facts, facts2, e.action)
            out.append((e.action, s2, r, TerminationValue(int(c))))
        return out
