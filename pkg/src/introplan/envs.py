"""The four benchmark environments and the one-shot episode protocol.

Grid search lives on an infinite integer lattice; the three relational
domains (blocks-world, drawers, bins) are defined in the embedded domain
texts below and share seeded initial-state generators.  An episode samples
an initial state, invokes the planner once (all planning time is charged
there), then replays the emitted plan through the true environment.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

from .domain import DomainDef, RelState
from .errors import MissingActionContextError, PlanReplayError, SpecError
from .fol import Const, Literal
from .introspector import grid_introspector_plan, introspector_plan
from .mdp import Mdp, NO_LIMITS, Plan, RelationalMdp, SearchLimits, SearchStats
from .planners import beam_k, bfs_oracle, greedy_exhaustive, mcts_k, mcts_puct_k, random_k
from .rewards import TerminationValue, evaluate_termination
from . import sexpr


class GridState(NamedTuple):
    x: int
    y: int


# Declaration order is the canonical successor order.
GRID_ACTIONS = {"UP": (0, 1), "DOWN": (0, -1), "LEFT": (-1, 0), "RIGHT": (1, 0)}

_ORIGIN = GridState(0, 0)


class GridMdp(Mdp):
    """Infinite empty grid: moves are unit vectors, reward +1 on reaching the
    origin and -1 otherwise, no termination signal."""

    def __init__(self, initial_state: GridState):
        self._initial = initial_state

    @property
    def initial_state(self) -> GridState:
        return self._initial

    @property
    def r_max(self):
        return 1

    @property
    def step_reward_floor(self):
        return -1

    def successors(self, state: GridState) -> list:
        x, y = state
        out = []
        for name, (dx, dy) in GRID_ACTIONS.items():
            s2 = GridState(x + dx, y + dy)
            reward = 1 if s2 == _ORIGIN else -1
            out.append((name, s2, reward, TerminationValue.CONTINUE))
        return out


def grid_mdp(s0: GridState) -> GridMdp:
    return GridMdp(s0)


def gen_grid(d: int, seed: int) -> GridState:
    """Uniform sample from the L1 sphere of radius ``d`` around the origin."""
    if d < 1:
        raise SpecError("grid size parameter must be >= 1")
    rng = random.Random(seed)
    points = []
    for x in range(-d, d + 1):
        r = d - abs(x)
        points.append(GridState(x, r))
        if r > 0:
            points.append(GridState(x, -r))
    return rng.choice(sorted(points))


def grid_horizon(d: int) -> int:
    return max(0, 2 * (d - 1))


def grid_optimal_return(d: int, horizon: int) -> int:
    """Best achievable grid return: reach the origin, then oscillate neutrally.

    Verified against the exhaustive oracle on small instances; stopping early
    is allowed, so an unreachable origin makes the empty plan optimal.
    """
    if d <= 0:
        return 0
    if d > horizon:
        return 0
    return 2 - d


BLOCKS_WORLD_TEXT = """
(domain blocks-world
  (predicates (OnTable 1) (On 2) (Clear 1) (HandEmpty 0) (Holding 1))
  (schema Pick (params ?X)
    (pre (and (lit OnTable ?X) (lit Clear ?X) (lit HandEmpty)))
    (add (Holding ?X))
    (del (OnTable ?X) (Clear ?X) (HandEmpty)))
  (schema Place (params ?X)
    (pre (lit Holding ?X))
    (add (OnTable ?X) (Clear ?X) (HandEmpty))
    (del (Holding ?X)))
  (schema Stack (params ?X ?Y)
    (pre (and (lit Holding ?X) (lit Clear ?Y)))
    (add (On ?X ?Y) (Clear ?X) (HandEmpty))
    (del (Holding ?X) (Clear ?Y)))
  (schema Unstack (params ?X ?Y)
    (pre (and (lit On ?X ?Y) (lit Clear ?X) (lit HandEmpty)))
    (add (Holding ?X) (Clear ?Y))
    (del (On ?X ?Y) (Clear ?X) (HandEmpty)))
  (reward (over next)
    (when (forall ?X (lit OnTable ?X)) 1)
    (else 0))
  (termination (over next)
    (when (forall ?X (lit OnTable ?X)) success)
    (else continue)))
"""

BINS_TEXT = """
(domain bins
  (predicates (IsItem 1) (IsBin 1) (OnShelf 1) (InBin 2) (Open 1))
  (schema CloseBin (params ?X)
    (pre (and (lit IsBin ?X) (lit Open ?X)))
    (add)
    (del (Open ?X)))
  (schema Pick (params ?X ?Y)
    (pre (and (lit IsItem ?X) (lit IsBin ?Y) (lit Open ?Y) (lit InBin ?X ?Y)))
    (add (OnShelf ?X))
    (del (InBin ?X ?Y)))
  (schema Put (params ?X ?Y)
    (pre (and (lit IsItem ?X) (lit IsBin ?Y) (lit Open ?Y) (lit OnShelf ?X)))
    (add (InBin ?X ?Y))
    (del (OnShelf ?X)))
  (reward (over prior)
    (when (exists ?X (and (lit IsBin ?X)
                          (action CloseBin ?X)
                          (not (exists ?Y (and (lit IsItem ?Y) (lit InBin ?Y ?X))))))
          1)
    (else 0))
  (termination (over next)
    (when (forall ?X (or (not (lit IsBin ?X))
                         (and (not (lit Open ?X))
                              (not (exists ?Y (and (lit IsItem ?Y) (lit InBin ?Y ?X)))))))
          success)
    (else continue)))
"""

DRAWERS_TEXT = """
(domain drawers
  (predicates (IsItem 1) (IsDrawer 1) (Matches 2) (InDrawer 2) (OnShelf 1)
              (Open 1) (Holding 1) (HandEmpty 0))
  (schema OpenDrawer (params ?D)
    (pre (and (lit IsDrawer ?D) (not (lit Open ?D))))
    (add (Open ?D))
    (del))
  (schema CloseDrawer (params ?D)
    (pre (and (lit IsDrawer ?D) (lit Open ?D)))
    (add)
    (del (Open ?D)))
  (schema PickFromDrawer (params ?I ?D)
    (pre (and (lit IsItem ?I) (lit IsDrawer ?D) (lit Open ?D)
              (lit InDrawer ?I ?D) (lit HandEmpty)))
    (add (Holding ?I))
    (del (InDrawer ?I ?D) (HandEmpty)))
  (schema PickFromShelf (params ?I)
    (pre (and (lit IsItem ?I) (lit OnShelf ?I) (lit HandEmpty)))
    (add (Holding ?I))
    (del (OnShelf ?I) (HandEmpty)))
  (schema PutInDrawer (params ?I ?D)
    (pre (and (lit Holding ?I) (lit IsDrawer ?D) (lit Open ?D)))
    (add (InDrawer ?I ?D) (HandEmpty))
    (del (Holding ?I)))
  (schema PutOnShelf (params ?I)
    (pre (lit Holding ?I))
    (add (OnShelf ?I) (HandEmpty))
    (del (Holding ?I)))
  (reward (over next)
    (when (and (forall ?I (or (not (lit IsItem ?I))
                              (exists ?D (and (lit Matches ?I ?D) (lit InDrawer ?I ?D)))))
               (forall ?D (or (not (lit IsDrawer ?D)) (not (lit Open ?D)))))
          1)
    (else 0))
  (termination (over next)
    (when (and (forall ?I (or (not (lit IsItem ?I))
                              (exists ?D (and (lit Matches ?I ?D) (lit InDrawer ?I ?D)))))
               (forall ?D (or (not (lit IsDrawer ?D)) (not (lit Open ?D)))))
          success)
    (else continue)))
"""

_DOMAIN_TEXTS = {
    "blocks-world": BLOCKS_WORLD_TEXT,
    "bins": BINS_TEXT,
    "drawers": DRAWERS_TEXT,
}


@lru_cache(maxsize=None)
def get_domain(name: str) -> DomainDef:
    """A built-in domain by name (blocks-world, bins, drawers)."""
    text = _DOMAIN_TEXTS.get(name)
    if text is None:
        raise SpecError(f"unknown domain {name!r}")
    return sexpr.parse_domain(text)


def fixture_text(name: str) -> str:
    return (resources.files("introplan") / "fixtures" / name).read_text()


def load_fixture(name: str) -> tuple[DomainDef, RelState]:
    """A pinned instance file shipped with the package."""
    return sexpr.parse_instance(fixture_text(name), get_domain)


def load_instance_text(text: str) -> tuple[DomainDef, RelState]:
    return sexpr.parse_instance(text, get_domain)


FIG_BLOCKS_FIXTURE = "blocks_two_stacks.sexp"
BINS_2X2_FIXTURE = "bins_2x2.sexp"


def _lits(domain: DomainDef, name: str, *consts: Const) -> Literal:
    return Literal(domain.predicate(name), consts)


def gen_blocks_world(n: int, seed: int) -> tuple[RelState, DomainDef]:
    """Random stacks with the hand empty; the expected stack count is Θ(√n).

    The stack count is drawn as round(√n · u) with u uniform in [0.5, 1.5],
    clipped to [1, n]; blocks are then split uniformly into that many
    non-empty stacks.
    """
    if n < 1:
        raise SpecError("blocks-world needs at least one block")
    domain = get_domain("blocks-world")
    rng = random.Random(seed)
    blocks = [Const(f"b{i + 1}") for i in range(n)]
    rng.shuffle(blocks)
    k = max(1, min(n, round(math.sqrt(n) * rng.uniform(0.5, 1.5))))
    cuts = sorted(rng.sample(range(1, n), k - 1)) if k > 1 else []
    stacks = [blocks[i:j] for i, j in zip([0] + cuts, cuts + [n])]
    facts = [_lits(domain, "HandEmpty")]
    for stack in stacks:
        facts.append(_lits(domain, "OnTable", stack[0]))
        for below, above in zip(stack, stack[1:]):
            facts.append(_lits(domain, "On", above, below))
        facts.append(_lits(domain, "Clear", stack[-1]))
    return RelState(frozenset(blocks), frozenset(facts)), domain


def gen_drawers(n: int, m: int, seed: int) -> tuple[RelState, DomainDef]:
    """Labeled items in random locations (drawers or shelf), drawers randomly
    open; every item must end in the drawer with its own label, all drawers
    closed.  Initially-terminal states are re-sampled."""
    if n < 1 or m < 1:
        raise SpecError("drawers needs at least one drawer and one item")
    domain = get_domain("drawers")
    rng = random.Random(seed)
    drawers = [Const(f"d{i + 1}") for i in range(n)]
    items = [Const(f"i{i + 1}") for i in range(m)]
    constants = frozenset(drawers + items)
    for _ in range(1000):
        facts = [_lits(domain, "HandEmpty")]
        facts += [_lits(domain, "IsDrawer", d) for d in drawers]
        facts += [_lits(domain, "IsItem", i) for i in items]
        for item in items:
            facts.append(_lits(domain, "Matches", item, drawers[rng.randrange(n)]))
            spot = rng.randrange(n + 1)
            if spot == n:
                facts.append(_lits(domain, "OnShelf", item))
            else:
                facts.append(_lits(domain, "InDrawer", item, drawers[spot]))
        for d in drawers:
            if rng.random() < 0.5:
                facts.append(_lits(domain, "Open", d))
        state = RelState(constants, frozenset(facts))
        if not _virtually_terminal(domain, state):
            return state, domain
    raise SpecError("drawers generator failed to produce a non-terminal state")


def gen_bins(n: int, m: int, seed: int) -> tuple[RelState, DomainDef]:
    """Items uniformly assigned to bins, all bins open.

    ``m`` may be zero (close every bin for one reward each); bins start open
    and items start inside bins rather than on the shelf.
    """
    if n < 1 or m < 0:
        raise SpecError("bins needs at least one bin and a non-negative item count")
    domain = get_domain("bins")
    rng = random.Random(seed)
    bins_ = [Const(f"b{i + 1}") for i in range(n)]
    items = [Const(f"i{i + 1}") for i in range(m)]
    facts = [_lits(domain, "IsBin", b) for b in bins_]
    facts += [_lits(domain, "Open", b) for b in bins_]
    facts += [_lits(domain, "IsItem", i) for i in items]
    for item in items:
        facts.append(_lits(domain, "InBin", item, bins_[rng.randrange(n)]))
    return RelState(frozenset(bins_ + items), frozenset(facts)), domain


def _virtually_terminal(domain: DomainDef, state: RelState) -> bool:
    """Termination checked on a no-op transition (same state, no action)."""
    try:
        value = evaluate_termination(domain.termination, state, None, state)
    except MissingActionContextError:
        return False
    return value is not TerminationValue.CONTINUE


def relational_horizon(state: RelState) -> int:
    """Safety cap on relational episode length."""
    return 8 * len(state.constants)


@dataclass(frozen=True)
class GeneratorParams:
    """Which instance to draw: domain id, size parameter, and seed.

    Domain ids: ``grid`` (size = initial distance), ``blocks`` (size = block
    count), ``drawers:N`` / ``bins:N`` (N fixed, size = item count).
    """

    domain: str
    size: int
    seed: int


def make_instance(params: GeneratorParams) -> tuple[Mdp, int]:
    """Sample the instance for ``params`` and return (mdp, horizon)."""
    kind, _, fixed = params.domain.partition(":")
    if kind == "grid":
        s0 = gen_grid(params.size, params.seed)
        return GridMdp(s0), grid_horizon(params.size)
    if kind == "blocks":
        state, domain = gen_blocks_world(params.size, params.seed)
    elif kind == "drawers":
        state, domain = gen_drawers(int(fixed or 3), params.size, params.seed)
    elif kind == "bins":
        state, domain = gen_bins(int(fixed or 2), params.size, params.seed)
    else:
        raise SpecError(f"unknown domain id {params.domain!r}")
    return RelationalMdp(domain, state), relational_horizon(state)


PLANNER_NAMES = ("greedy", "random", "beam", "mcts", "mcts-u", "introspector")


def resolve_planner(spec: str):
    """Planner factory for CLI strings: greedy, random:K, beam:K, mcts:K,
    mcts-u:K, introspector.  Returns a callable (mdp, horizon, seed, limits)."""
    name, _, arg = spec.partition(":")
    if name in ("greedy", "introspector"):
        if arg:
            raise SpecError(f"planner {name} takes no budget argument")
    else:
        if name not in PLANNER_NAMES:
            raise SpecError(f"unknown planner {spec!r}")
        try:
            k = int(arg)
        except ValueError:
            raise SpecError(f"planner {spec!r} needs an integer budget, e.g. {name}:100")
        if k < 1:
            raise SpecError("planner budget must be >= 1")

    def plan(mdp: Mdp, horizon: int, seed: int, limits: SearchLimits = NO_LIMITS) -> SearchStats:
        if name == "greedy":
            return greedy_exhaustive(mdp, horizon, limits)
        if name == "random":
            return random_k(mdp, horizon, k, seed, limits)
        if name == "beam":
            return beam_k(mdp, horizon, k, limits)
        if name == "mcts":
            return mcts_k(mdp, horizon, k, seed, limits=limits)
        if name == "mcts-u":
            return mcts_puct_k(mdp, horizon, k, seed, limits=limits)
        if isinstance(mdp, GridMdp):
            return grid_introspector_plan(mdp.initial_state, horizon, limits)
        return introspector_plan(mdp.domain, mdp.initial_state, horizon, limits)

    return plan


def replay(mdp: Mdp, actions, horizon: int):
    """Re-simulate a plan through the environment.

    Returns (return, status, steps).  An inapplicable action is a planner bug
    and raises PlanReplayError.
    """
    state = mdp.initial_state
    ret = 0
    status = TerminationValue.CONTINUE
    steps = 0
    for action in actions:
        if steps >= horizon:
            break
        match = None
        for cand, s2, r, term in mdp.successors(state):
            if cand == action:
                match = (s2, r, term)
                break
        if match is None:
            raise PlanReplayError(f"action {action!r} is not applicable at step {steps}")
        state, r, term = match
        ret += r
        steps += 1
        if term is not TerminationValue.CONTINUE:
            status = term
            break
    return ret, status, steps


@dataclass
class EpisodeResult:
    """One episode's outcome; normalized score is None when no optimum is known."""

    params: GeneratorParams
    planner: str
    total_return: object
    normalized_score: float | None
    plan_length: int
    status: TerminationValue
    stats: SearchStats


def run_episode(
    params: GeneratorParams,
    planner: str,
    limits: SearchLimits = NO_LIMITS,
    normalize: str = "auto",
    oracle_state_cap: int = 200_000,
) -> EpisodeResult:
    """One-shot episode: sample, plan once, replay, score.

    ``normalize`` is ``auto`` (grid analytically, relational skipped),
    ``oracle`` (force the reachability oracle; small instances only), or
    ``none``.
    """
    plan_fn = resolve_planner(planner)
    mdp, horizon = make_instance(params)
    if isinstance(mdp, RelationalMdp) and _virtually_terminal(mdp.domain, mdp.initial_state):
        stats = SearchStats(0, 0.0, Plan((), 0, TerminationValue.SUCCESS))
        return EpisodeResult(params, planner, 0, 1.0, 0, TerminationValue.SUCCESS, stats)
    stats = plan_fn(mdp, horizon, params.seed, limits)
    ret, status, steps = replay(mdp, stats.plan.actions, horizon)
    if ret != stats.plan.total_return:
        raise PlanReplayError(
            f"planner reported return {stats.plan.total_return}, replay got {ret}"
        )
    score = _normalized_score(params, mdp, horizon, ret, normalize, oracle_state_cap)
    return EpisodeResult(params, planner, ret, score, steps, status, stats)


def _normalized_score(params, mdp, horizon, ret, normalize, oracle_state_cap):
    if normalize == "none":
        return None
    if params.domain == "grid":
        worst = -horizon
        opt = grid_optimal_return(params.size, horizon)
    elif normalize == "oracle":
        graph = bfs_oracle(mdp, state_cap=oracle_state_cap)
        if graph.optimal_success_plan is None:
            return None
        opt = graph.optimal_success_plan.total_return
        floor = min(v for _, v in mdp.domain.reward.clauses)
        worst = horizon * min(Fraction(0), floor)
    else:
        return None
    if opt == worst:
        return 1.0 if ret >= opt else 0.0
    return max(0.0, min(1.0, float((ret - worst) / (opt - worst))))
