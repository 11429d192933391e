"""Reward-maximization baseline planners and the exhaustive reachability oracle.

All planners operate over the abstract deterministic MDP interface, count one
node per ``successors`` call, and emit identical results for identical
(instance, seed, config).
"""

from __future__ import annotations

import heapq
import math
import random
import time
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .errors import StateCapExceededError
from .mdp import EMPTY_PLAN, Mdp, NO_LIMITS, Plan, SearchLimits, SearchStats
from .rewards import TerminationValue

_NEG_INF = float("-inf")


def _actions_of(link) -> tuple:
    out = []
    while link is not None:
        link, action = link
        out.append(action)
    out.reverse()
    return tuple(out)


class _Budget:
    """Tracks node and wall-time caps for one planner invocation."""

    __slots__ = ("node_cap", "deadline", "start", "nodes", "exhausted")

    def __init__(self, limits: SearchLimits):
        self.start = time.perf_counter()
        self.node_cap = limits.node_cap
        self.deadline = None if limits.time_cap is None else self.start + limits.time_cap
        self.nodes = 0
        self.exhausted = False

    def tick(self) -> bool:
        """Count one expansion; True while within budget."""
        self.nodes += 1
        if self.node_cap is not None and self.nodes >= self.node_cap:
            self.exhausted = True
        elif self.deadline is not None and (self.nodes & 0x3FF) == 0:
            if time.perf_counter() > self.deadline:
                self.exhausted = True
        return not self.exhausted

    def stats(self, plan: Plan, **details) -> SearchStats:
        return SearchStats(
            nodes_expanded=self.nodes,
            wall_time=time.perf_counter() - self.start,
            plan=plan,
            budget_exhausted=self.exhausted,
            details=dict(details),
        )


def greedy_exhaustive(mdp: Mdp, horizon: int, limits: SearchLimits = NO_LIMITS) -> SearchStats:
    """Exhaustive best-first search over paths, ordered by cumulative return.

    Paths are expanded in (return desc, remaining steps desc, insertion)
    order with a visited map keeping the best return per state; no frontier
    pruning beyond that.  The search stops at the first success transition,
    otherwise runs until the frontier empties or every path reaches the
    horizon.  A path becomes a candidate plan when it terminates, reaches the
    horizon, or just earned more than the worst-case step reward; candidates
    are compared by pessimistic completion (return plus the per-step reward
    floor for each unplayed horizon step), which in penalty-free domains is
    plain best-return.
    """
    budget = _Budget(limits)
    floor = mdp.step_reward_floor
    best_charged = _NEG_INF
    best = (0, None, TerminationValue.CONTINUE)  # (return, path link, status)
    if horizon > 0:
        counter = 0
        start = mdp.initial_state
        # heap keys: (-return, -remaining, insertion)
        frontier = [(0, -horizon, 0, 0, start, None)]
        visited = {start: 0}
        while frontier:
            neg_ret, neg_rem, _, ret, state, link = heapq.heappop(frontier)
            depth = horizon + neg_rem
            if not budget.tick():
                break
            for action, s2, r, term in mdp.successors(state):
                ret2 = ret + r
                link2 = (link, action)
                if term is TerminationValue.SUCCESS:
                    plan = Plan(_actions_of(link2), ret2, term)
                    return budget.stats(plan)
                if term is not TerminationValue.CONTINUE:
                    charged = ret2
                elif depth + 1 == horizon or r > floor:
                    charged = ret2 + floor * (horizon - depth - 1)
                else:
                    charged = _NEG_INF  # not a candidate endpoint
                if charged > best_charged:
                    best_charged = charged
                    best = (ret2, link2, term)
                if (
                    term is TerminationValue.CONTINUE
                    and depth + 1 < horizon
                    and ret2 > visited.get(s2, _NEG_INF)
                ):
                    visited[s2] = ret2
                    counter += 1
                    heapq.heappush(
                        frontier, (-ret2, -(horizon - depth - 1), counter, ret2, s2, link2)
                    )
    plan = Plan(_actions_of(best[1]), best[0], best[2])
    return budget.stats(plan)


def random_k(
    mdp: Mdp, horizon: int, k: int, seed: int, limits: SearchLimits = NO_LIMITS
) -> SearchStats:
    """Best of ``k`` uniformly random action sequences of length at most ``horizon``,
    ranked success-first and then by return."""
    rng = random.Random(seed)
    budget = _Budget(limits)
    best = None  # (success, return, actions, status)
    for _ in range(k):
        state = mdp.initial_state
        ret = 0
        actions = []
        status = TerminationValue.CONTINUE
        for _step in range(horizon):
            if not budget.tick():
                break
            succ = mdp.successors(state)
            if not succ:
                break
            action, state, r, term = rng.choice(succ)
            actions.append(action)
            ret += r
            if term is not TerminationValue.CONTINUE:
                status = term
                break
        key = (status is TerminationValue.SUCCESS, ret)
        if best is None or key > (best[0], best[1]):
            best = (key[0], ret, tuple(actions), status)
        if budget.exhausted:
            break
    plan = EMPTY_PLAN if best is None else Plan(best[2], best[1], best[3])
    return budget.stats(plan)


def beam_k(mdp: Mdp, horizon: int, k: int, limits: SearchLimits = NO_LIMITS) -> SearchStats:
    """Width-``k`` level-synchronous beam search.

    Every beam member is expanded at each depth; children are deduplicated by
    state (keeping the best return) and ranked by cumulative return with ties
    broken by canonical generation order.  Runs to the horizon or the first
    success transition and returns the best plan encountered, using the same
    candidate endpoints and pessimistic-completion ranking as
    :func:`greedy_exhaustive`.
    """
    budget = _Budget(limits)
    floor = mdp.step_reward_floor
    beam = [(0, None, mdp.initial_state)]
    best_charged = _NEG_INF
    best = (0, None, TerminationValue.CONTINUE)
    for depth in range(horizon):
        children: dict = {}
        seq = 0
        for ret, link, state in beam:
            if not budget.tick():
                break
            for action, s2, r, term in mdp.successors(state):
                ret2 = ret + r
                link2 = (link, action)
                if term is TerminationValue.SUCCESS:
                    plan = Plan(_actions_of(link2), ret2, term)
                    return budget.stats(plan)
                if term is not TerminationValue.CONTINUE:
                    charged = ret2
                elif depth + 1 == horizon or r > floor:
                    charged = ret2 + floor * (horizon - depth - 1)
                else:
                    charged = _NEG_INF  # not a candidate endpoint
                if charged > best_charged:
                    best_charged = charged
                    best = (ret2, link2, term)
                if term is TerminationValue.CONTINUE:
                    prev = children.get(s2)
                    if prev is None or ret2 > prev[0]:
                        children[s2] = (ret2, seq, link2)
                    seq += 1
        if budget.exhausted or not children:
            break
        ranked = sorted(
            children.items(), key=lambda kv: (-kv[1][0], kv[1][1])
        )[:k]
        beam = [(ret, link, state) for state, (ret, _, link) in ranked]
    plan = Plan(_actions_of(best[1]), best[0], best[2])
    return budget.stats(plan)


class _TreeNode:
    __slots__ = ("state", "reward_in", "terminal", "children", "untried", "visits", "value")

    def __init__(self, state, reward_in, terminal):
        self.state = state
        self.reward_in = reward_in
        self.terminal = terminal  # termination value of the incoming transition
        self.children: dict = {}
        self.untried = None  # lazily-filled list of unexpanded transitions
        self.visits = 0
        self.value = 0.0


def _ucb1(node: _TreeNode, c: float):
    log_n = math.log(node.visits)

    def score(item):
        action, child = item
        return (
            child.value / child.visits + c * math.sqrt(log_n / child.visits),
            _action_key(action),
        )

    return max(node.children.items(), key=score)


def _puct(node: _TreeNode, c_puct: float):
    sqrt_n = math.sqrt(node.visits)
    prior = 1.0 / max(1, len(node.children) + len(node.untried or ()))

    def score(item):
        action, child = item
        q = child.value / child.visits if child.visits else 0.0
        return (q + c_puct * prior * sqrt_n / (1 + child.visits), _action_key(action))

    return max(node.children.items(), key=score)


def _action_key(action) -> str:
    # Descending tie-break under max(): invert by sorting on the repr's
    # complement so the canonically-first action wins ties.
    return "".join(chr(0x10FFFF - ord(ch)) for ch in repr(action))


def mcts_k(
    mdp: Mdp,
    horizon: int,
    k: int,
    seed: int,
    c: float = math.sqrt(2),
    limits: SearchLimits = NO_LIMITS,
) -> SearchStats:
    """Pure Monte Carlo tree search: UCB1 selection, uniform random rollouts."""
    return _mcts_run(mdp, horizon, k, seed, lambda n: _ucb1(n, c), limits)


def mcts_puct_k(
    mdp: Mdp,
    horizon: int,
    k: int,
    seed: int,
    c_puct: float = 1.25,
    limits: SearchLimits = NO_LIMITS,
) -> SearchStats:
    """Monte Carlo tree search with the pUCT selection rule and a uniform prior."""
    return _mcts_run(mdp, horizon, k, seed, lambda n: _puct(n, c_puct), limits)


def _mcts_run(mdp, horizon, k, seed, select, limits) -> SearchStats:
    rng = random.Random(seed)
    budget = _Budget(limits)
    root = _TreeNode(mdp.initial_state, 0, TerminationValue.CONTINUE)
    for _ in range(k):
        if budget.exhausted:
            break
        path = [root]
        node, depth, ret = root, 0, 0
        while node.terminal is TerminationValue.CONTINUE and depth < horizon:
            if node.untried is None:
                if not budget.tick():
                    break
                node.untried = list(mdp.successors(node.state))
            if node.untried:
                # expansion: attach one randomly-chosen unexplored transition
                action, s2, r, term = node.untried.pop(rng.randrange(len(node.untried)))
                child = _TreeNode(s2, r, term)
                node.children[action] = child
                node = child
                path.append(node)
                depth += 1
                ret += r
                break
            if not node.children:
                break
            _, node = select(node)
            path.append(node)
            depth += 1
            ret += node.reward_in
        # rollout to the horizon with uniform random actions
        state, term = node.state, node.terminal
        while term is TerminationValue.CONTINUE and depth < horizon:
            if not budget.tick():
                break
            succ = mdp.successors(state)
            if not succ:
                break
            _, state, r, term = succ[rng.randrange(len(succ))]
            ret += r
            depth += 1
        value = float(ret)  # backed-up value: total return of the simulated path
        for n in path:
            n.visits += 1
            n.value += value
    return budget.stats(_emit_plan(mdp, root, horizon, rng, budget))


def _emit_plan(mdp: Mdp, root: _TreeNode, horizon: int, rng, budget: _Budget) -> Plan:
    """Emit a full plan: descend by visit count (ties by canonical action
    order), then complete to the horizon with the rollout policy."""
    actions = []
    ret = 0
    status = TerminationValue.CONTINUE
    node = root
    while node.children:
        action, child = max(
            node.children.items(), key=lambda kv: (kv[1].visits, _action_key(kv[0]))
        )
        if child.visits == 0:
            break
        actions.append(action)
        ret += child.reward_in
        status = child.terminal
        node = child
        if status is not TerminationValue.CONTINUE:
            break
    state = node.state
    while status is TerminationValue.CONTINUE and len(actions) < horizon:
        if not budget.tick():
            break
        succ = mdp.successors(state)
        if not succ:
            break
        action, state, r, term = succ[rng.randrange(len(succ))]
        actions.append(action)
        ret += r
        status = term
    return Plan(tuple(actions), ret, status)


@dataclass(frozen=True)
class GraphTransition:
    src: int
    action: object
    dst: int
    reward: Fraction
    termination: TerminationValue


@dataclass
class ReachabilityGraph:
    """Full reachable transition system of an instance, states in BFS order."""

    states: list
    transitions: list[GraphTransition]
    r_max: Fraction
    dead_ends: frozenset[int]
    optimal_success_plan: Plan | None

    @property
    def milestone_transitions(self) -> list[GraphTransition]:
        """Transitions earning the maximal reward value."""
        return [t for t in self.transitions if t.reward == self.r_max]

    def index_of(self, state) -> int:
        return self.states.index(state)

    def optimal_return(self, horizon: int, step_reward_floor=0):
        """Best return over plans that end at a terminal transition, at a
        reward above the per-step floor, or at the horizon.

        This matches the candidate-plan rule the search planners use, so the
        value agrees with what an exhaustive planner can emit.  A transition
        earning more than the floor may "bank" its return and stop there;
        otherwise the trajectory must play on until the horizon.
        """
        by_src: dict[int, list[GraphTransition]] = {}
        for t in self.transitions:
            by_src.setdefault(t.src, []).append(t)
        n = len(self.states)
        value = [0] * n  # zero steps left: the plan ends here regardless
        for _ in range(horizon):
            nxt = []
            for i in range(n):
                best = None
                for t in by_src.get(i, ()):
                    if t.termination is not TerminationValue.CONTINUE:
                        v = t.reward
                    else:
                        cont = value[t.dst]
                        if t.reward > step_reward_floor:
                            cont = max(cont, 0)  # may stop right after this reward
                        v = t.reward + cont
                    if best is None or v > best:
                        best = v
                nxt.append(0 if best is None else best)
            value = nxt
        return value[0]


def bfs_oracle(mdp: Mdp, state_cap: int = 100_000) -> ReachabilityGraph:
    """Breadth-first enumeration of the reachable state space.

    States entered only by terminal transitions are recorded but not expanded
    (the episode ends there).  Dead ends are states from which no
    success-terminating path exists, computed by backward reachability; the
    optimal success plan is a shortest success path from the root.
    """
    start = mdp.initial_state
    states = [start]
    index = {start: 0}
    transitions: list[GraphTransition] = []
    queue = deque([0])
    queued = {0}
    expanded = set()
    while queue:
        i = queue.popleft()
        if i in expanded:
            continue
        expanded.add(i)
        for action, s2, r, term in mdp.successors(states[i]):
            j = index.get(s2)
            if j is None:
                if len(states) >= state_cap:
                    raise StateCapExceededError(
                        f"reachable state count exceeds cap ({state_cap})"
                    )
                j = len(states)
                index[s2] = j
                states.append(s2)
            transitions.append(GraphTransition(i, action, j, r, term))
            if term is TerminationValue.CONTINUE and j not in expanded and j not in queued:
                queued.add(j)
                queue.append(j)

    # Backward reachability: alive states can still reach a success transition.
    alive = set()
    reverse: dict[int, list[int]] = {}
    for t in transitions:
        if t.termination is TerminationValue.SUCCESS:
            alive.add(t.src)
            alive.add(t.dst)
        elif t.termination is TerminationValue.CONTINUE:
            reverse.setdefault(t.dst, []).append(t.src)
    stack = list(alive)
    while stack:
        j = stack.pop()
        for i in reverse.get(j, ()):
            if i not in alive:
                alive.add(i)
                stack.append(i)
    dead_ends = frozenset(range(len(states))) - alive

    # Shortest success path from the root over continue edges.
    by_src: dict[int, list[GraphTransition]] = {}
    for t in transitions:
        by_src.setdefault(t.src, []).append(t)
    parent: dict[int, tuple[int, GraphTransition] | None] = {0: None}
    plan = None
    bfs = deque([0])
    while bfs and plan is None:
        i = bfs.popleft()
        for t in by_src.get(i, ()):
            if t.termination is TerminationValue.SUCCESS:
                chain = [t]
                node = i
                while parent[node] is not None:
                    prev, edge = parent[node]
                    chain.append(edge)
                    node = prev
                chain.reverse()
                plan = Plan(
                    tuple(e.action for e in chain),
                    sum(e.reward for e in chain),
                    TerminationValue.SUCCESS,
                )
                break
            if t.termination is TerminationValue.CONTINUE and t.dst not in parent:
                parent[t.dst] = (i, t)
                bfs.append(t.dst)

    return ReachabilityGraph(
        states=states,
        transitions=transitions,
        r_max=mdp.r_max,
        dead_ends=dead_ends,
        optimal_success_plan=plan,
    )
