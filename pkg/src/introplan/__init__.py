"""Milestone-directed planning toolkit for relational MDPs.

Reward and termination models are first-order decision lists; analyzing the
reward model yields state mutations (milestone constraints) that drive a
bilevel planner.  Baseline reward-maximization planners and a benchmark
harness round out the package.
"""

from .domain import (
    ActionSchema,
    DomainDef,
    GroundAction,
    RelState,
    applicable_actions,
    apply,
    is_applicable,
)
from .fol import (
    TRUE,
    ActionAtom,
    And,
    Const,
    Exists,
    Forall,
    Formula,
    Lit,
    Literal,
    Not,
    Or,
    PredicateDecl,
    Var,
    evaluate,
    free_variables,
    substitute,
)
from .introspector import (
    grid_introspector_plan,
    inner_goal_search,
    introspector_plan,
    literal_count_heuristic,
)
from .mdp import Mdp, Plan, RelationalMdp, SearchLimits, SearchStats
from .mutation import (
    IMMUTABLY_VALID,
    MutabilityIndex,
    Mutation,
    is_satisfied,
    mutate_false,
    mutate_true,
    satisfy_all,
    satisfy_any,
    satisfy_each,
)
from .planners import (
    ReachabilityGraph,
    beam_k,
    bfs_oracle,
    greedy_exhaustive,
    mcts_k,
    mcts_puct_k,
    random_k,
)
from .rewards import (
    DecisionList,
    EvalOver,
    TerminationValue,
    evaluate_reward,
    evaluate_termination,
    extract_maximal_reward_condition,
)
from .envs import (
    GeneratorParams,
    GridMdp,
    GridState,
    gen_bins,
    gen_blocks_world,
    gen_drawers,
    gen_grid,
    get_domain,
    grid_mdp,
    load_fixture,
    run_episode,
)

__version__ = "0.1.0"
