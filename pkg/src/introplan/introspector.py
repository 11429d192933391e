"""The bilevel milestone-directed planner.

The outer level greedily searches milestone space: it extracts the
maximal-reward condition from the reward model once, enumerates state
mutations of the current state, and hands each to an inner goal search.  The
inner level is greedy best-first search guided by the literal-counting
heuristic, with a transition-level goal test.  All mutation and grounding
work happens inside the planning call and is charged to its runtime.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

from .domain import DomainDef, RelState
from .mdp import NO_LIMITS, Plan, RelationalMdp, SearchLimits, SearchStats
from .mutation import (
    IMMUTABLY_VALID,
    MutabilityIndex,
    format_mutation,
    is_satisfied,
    mutate_true,
)
from .rewards import EvalOver, TerminationValue, extract_maximal_reward_condition

DEFAULT_INNER_NODE_CAP = 50_000


def literal_count_heuristic(s: RelState, m) -> int:
    """Number of mutation constraints not yet satisfied in ``s``.

    Counts missing make-true literals and present make-false literals, plus
    one for a pending required action (the satisfying transition still needs
    at least one more step).
    """
    if m is IMMUTABLY_VALID:
        return 0
    h = len(m.make_true - s.facts) + len(m.make_false & s.facts)
    if m.required_action is not None:
        h += 1
    return h


@dataclass
class InnerResult:
    """Outcome of one inner goal search."""

    reward: object
    actions: tuple
    state: RelState
    status: TerminationValue
    expanded: int


def inner_goal_search(
    mdp: RelationalMdp,
    start: RelState,
    budget: int,
    m,
    node_cap: int = DEFAULT_INNER_NODE_CAP,
) -> InnerResult:
    """Greedy best-first search for a transition that realizes the mutation.

    States are ordered by ascending heuristic value, ties by fewer steps and
    then canonical action order.  The goal test is transition-level: state
    literal constraints are checked against the prior or next state per the
    reward model's evaluation flag, and the required action (if any) must
    match the transition's action.  Rewards accumulate along the trajectory;
    a success-terminating transition completes the episode and is accepted
    even when it is not the mutation's own milestone.
    """
    if m is IMMUTABLY_VALID:
        return InnerResult(0, (), start, TerminationValue.CONTINUE, 0)
    goal_on_prior = mdp.domain.reward.eval_over is EvalOver.PRIOR_STATE
    expanded = 0
    counter = 0
    frontier = [(literal_count_heuristic(start, m), 0, 0, start, None, 0)]
    visited = {start}
    while frontier and expanded < node_cap:
        _, steps, _, state, link, ret = heapq.heappop(frontier)
        if steps >= budget:
            continue
        expanded += 1
        for action, s2, r, term in mdp.successors(state):
            goal_state = state if goal_on_prior else s2
            if is_satisfied(m, goal_state, action) or term is TerminationValue.SUCCESS:
                actions = _actions_of((link, action))
                return InnerResult(ret + r, actions, s2, term, expanded)
            if term is TerminationValue.CONTINUE and s2 not in visited:
                visited.add(s2)
                counter += 1
                heapq.heappush(
                    frontier,
                    (
                        literal_count_heuristic(s2, m),
                        steps + 1,
                        counter,
                        s2,
                        (link, action),
                        ret + r,
                    ),
                )
            # failure transitions are dead trajectories and are dropped
    return InnerResult(0, (), start, TerminationValue.CONTINUE, expanded)


def _actions_of(link) -> tuple:
    out = []
    while link is not None:
        link, action = link
        out.append(action)
    out.reverse()
    return tuple(out)


class _Candidate:
    """Outer-queue entry ordered lexicographically descending on
    (score, moves remaining, actions, resulting state)."""

    __slots__ = ("score", "moves", "actions", "state", "_key")

    def __init__(self, score, moves, actions, state):
        self.score = score
        self.moves = moves
        self.actions = actions
        self.state = state
        self._key = (
            score,
            moves,
            tuple(repr(a) for a in actions),
            repr(state),
        )

    def __lt__(self, other: "_Candidate") -> bool:
        # inverted so heapq pops the lexicographic maximum
        return self._key > other._key


def introspector_plan(
    domain: DomainDef,
    s0: RelState,
    horizon: int,
    limits: SearchLimits = NO_LIMITS,
    inner_node_cap: int = DEFAULT_INNER_NODE_CAP,
    trace: list | None = None,
) -> SearchStats:
    """Plan by greedy search through milestone space.

    Maintains a max-priority queue of candidate plans and a visited map of
    the best score per milestone state.  Each popped candidate enumerates the
    mutations of its state against the maximal-reward condition and runs the
    inner goal search per mutation; a success-terminating inner trajectory
    returns the concatenated plan immediately, while continuing trajectories
    push extended candidates when they improve on the visited score.
    """
    t0 = time.perf_counter()
    deadline = None if limits.time_cap is None else t0 + limits.time_cap
    mdp = RelationalMdp(domain, s0)
    idx = MutabilityIndex.from_domain(domain)
    condition = extract_maximal_reward_condition(domain.reward)
    nodes = 0
    inner_failures = 0
    budget_exhausted = False
    best_partial = (0, ())
    queue = [_Candidate(0, horizon, (), s0)]
    visited = {s0: 0}

    def stats(plan: Plan) -> SearchStats:
        return SearchStats(
            nodes_expanded=nodes,
            wall_time=time.perf_counter() - t0,
            plan=plan,
            budget_exhausted=budget_exhausted,
            details={"inner_failures": inner_failures},
        )

    while queue:
        cand = heapq.heappop(queue)
        if cand.moves <= 0:
            # out of moves: emit the best-scoring plan found so far
            return stats(Plan(cand.actions, cand.score, TerminationValue.CONTINUE))
        mutations = mutate_true(cand.state, condition, idx)
        if trace is not None:
            trace.append(
                f"pop score={cand.score} moves={cand.moves} "
                f"actions={len(cand.actions)} mutations={len(mutations)}"
            )
            for m in mutations:
                trace.append(f"  mutation {format_mutation(m)}")
        for m in mutations:
            inner = inner_goal_search(mdp, cand.state, cand.moves, m, inner_node_cap)
            nodes += inner.expanded
            if limits.node_cap is not None and nodes >= limits.node_cap:
                budget_exhausted = True
            if deadline is not None and time.perf_counter() > deadline:
                budget_exhausted = True
            new_score = cand.score + inner.reward
            new_actions = cand.actions + inner.actions
            if trace is not None:
                trace.append(
                    f"  inner status={inner.status.name} reward={inner.reward} "
                    f"steps={len(inner.actions)} expanded={inner.expanded}"
                )
            if inner.status is TerminationValue.SUCCESS:
                return stats(Plan(new_actions, new_score, TerminationValue.SUCCESS))
            if inner.status is TerminationValue.FAILURE:
                inner_failures += 1
                continue
            if not inner.actions:
                continue  # no progress within budget
            if inner.state not in visited or visited[inner.state] < new_score:
                visited[inner.state] = new_score
                heapq.heappush(
                    queue,
                    _Candidate(new_score, horizon - len(new_actions), new_actions, inner.state),
                )
                if (new_score, len(new_actions)) > (best_partial[0], len(best_partial[1])):
                    best_partial = (new_score, new_actions)
            if budget_exhausted:
                break
        if budget_exhausted:
            break
    return stats(Plan(best_partial[1], best_partial[0], TerminationValue.CONTINUE))


def grid_introspector_plan(s0, horizon: int, limits: SearchLimits = NO_LIMITS) -> SearchStats:
    """Milestone-directed planning on the grid: informed search to the origin.

    The single milestone is the origin and the L1 distance is an exact
    heuristic, so an A*-style search ordered by (depth + distance, distance)
    expands a number of states linear in the initial distance.  The path is
    padded to the horizon with return-neutral leave/return pairs; a final odd
    step is omitted since it would only lower the return.
    """
    from .envs import GRID_ACTIONS, GridState  # local import to avoid a cycle

    t0 = time.perf_counter()
    nodes = 0
    origin = GridState(0, 0)
    path: tuple = ()
    ret = 0
    if s0 != origin and abs(s0.x) + abs(s0.y) <= horizon:
        counter = 0
        frontier = [(abs(s0.x) + abs(s0.y), abs(s0.x) + abs(s0.y), 0, s0, None, 0)]
        seen = {s0}
        while frontier:
            _, h, _, state, link, depth = heapq.heappop(frontier)
            nodes += 1
            if state == origin:
                path = _actions_of(link)
                ret = -(len(path) - 1) + 1
                break
            for name, (dx, dy) in GRID_ACTIONS.items():
                s2 = GridState(state.x + dx, state.y + dy)
                if s2 in seen:
                    continue
                seen.add(s2)
                h2 = abs(s2.x) + abs(s2.y)
                counter += 1
                heapq.heappush(
                    frontier, (depth + 1 + h2, h2, counter, s2, (link, name), depth + 1)
                )
    if s0 == origin or path:  # the path, when found, always ends at the origin
        # return-neutral padding: each leave/return pair nets zero
        pairs = (horizon - len(path)) // 2
        path = path + ("UP", "DOWN") * pairs
    plan = Plan(path, ret, TerminationValue.CONTINUE)
    return SearchStats(
        nodes_expanded=nodes,
        wall_time=time.perf_counter() - t0,
        plan=plan,
    )
