"""The bilevel planner: heuristic, inner goal search, outer milestone search,
and the grid instantiation."""

import pytest

from introplan.domain import GroundAction, RelState, apply
from introplan.envs import GridState, get_domain, grid_horizon, load_fixture
from introplan.fol import Const
from introplan.introspector import (
    grid_introspector_plan,
    inner_goal_search,
    introspector_plan,
    literal_count_heuristic,
)
from introplan.mdp import RelationalMdp
from introplan.mutation import (
    IMMUTABLY_VALID,
    MutabilityIndex,
    Mutation,
    mutate_true,
)
from introplan.rewards import TerminationValue, extract_maximal_reward_condition


@pytest.fixture(scope="module")
def blocks_fixture():
    return load_fixture("blocks_two_stacks.sexp")


@pytest.fixture(scope="module")
def bins_fixture():
    return load_fixture("bins_2x2.sexp")


def _condition_mutations(domain, state):
    idx = MutabilityIndex.from_domain(domain)
    condition = extract_maximal_reward_condition(domain.reward)
    return mutate_true(state, condition, idx)


def test_heuristic_counts_unsatisfied_constraints(blocks_fixture):
    domain, state = blocks_fixture
    (mutation,) = _condition_mutations(domain, state)
    assert literal_count_heuristic(state, mutation) == 1  # only OnTable(a) missing


def test_heuristic_zero_cases(blocks_fixture):
    domain, state = blocks_fixture
    assert literal_count_heuristic(state, IMMUTABLY_VALID) == 0
    satisfied = Mutation(make_true=(domain.predicate("OnTable")(Const("b")),))
    assert literal_count_heuristic(state, satisfied) == 0


def test_heuristic_charges_required_action(bins_fixture):
    domain, state = bins_fixture
    first, _ = _condition_mutations(domain, state)
    # one item to remove from the bin plus the closing action
    assert literal_count_heuristic(state, first) == 1 + 1


def test_heuristic_zero_implies_satisfied(blocks_fixture):
    from introplan.mutation import is_satisfied

    domain, state = blocks_fixture
    for mutation in _condition_mutations(domain, state):
        if (
            literal_count_heuristic(state, mutation) == 0
            and mutation is not IMMUTABLY_VALID
            and mutation.required_action is None
        ):
            assert is_satisfied(mutation, state)


def test_inner_search_blocks(blocks_fixture):
    domain, state = blocks_fixture
    (mutation,) = _condition_mutations(domain, state)
    result = inner_goal_search(RelationalMdp(domain, state), state, 32, mutation)
    assert result.status is TerminationValue.SUCCESS
    assert [repr(a) for a in result.actions] == ["Unstack(a, d)", "Place(a)"]
    assert result.reward == 1


def test_inner_search_immutably_valid(blocks_fixture):
    domain, state = blocks_fixture
    result = inner_goal_search(RelationalMdp(domain, state), state, 32, IMMUTABLY_VALID)
    assert result.actions == () and result.reward == 0
    assert result.status is TerminationValue.CONTINUE


def test_inner_search_respects_budget(bins_fixture):
    domain, state = bins_fixture
    first, _ = _condition_mutations(domain, state)
    result = inner_goal_search(RelationalMdp(domain, state), state, 1, first)
    # two steps are needed; one-move budget cannot realize the mutation
    assert result.actions == ()
    assert result.status is TerminationValue.CONTINUE


def test_inner_search_from_mid_episode_state(bins_fixture):
    """After one bin is closed, pursuing the remaining mutation succeeds and
    ends the episode."""
    domain, state = bins_fixture
    i2, b2 = Const("i2"), Const("b2")
    state = apply(state, GroundAction(domain.schema("Pick"), (i2, b2)))
    state = apply(state, GroundAction(domain.schema("CloseBin"), (b2,)))
    mutations = _condition_mutations(domain, state)
    realizable = [m for m in mutations if m.required_action.args == (Const("b1"),)]
    assert len(realizable) == 1
    result = inner_goal_search(RelationalMdp(domain, state), state, 30, realizable[0])
    assert result.status is TerminationValue.SUCCESS
    assert result.reward == 1


def test_outer_plan_blocks(blocks_fixture):
    domain, state = blocks_fixture
    stats = introspector_plan(domain, state, 32)
    assert stats.plan.status is TerminationValue.SUCCESS
    assert len(stats.plan.actions) == 2
    final = state
    for action in stats.plan.actions:
        final = apply(final, action)
    assert all(repr(f).startswith(("OnTable", "Clear", "HandEmpty")) for f in final.facts)


def test_outer_plan_bins(bins_fixture):
    domain, state = bins_fixture
    stats = introspector_plan(domain, state, 32)
    assert stats.plan.status is TerminationValue.SUCCESS
    assert len(stats.plan.actions) == 4
    assert stats.plan.total_return == 2


def test_outer_plan_reward_free_domain():
    from introplan.sexpr import parse_domain

    text = """
    (domain idle
      (predicates (P 1))
      (schema Flip (params ?X) (pre (lit P ?X)) (add) (del (P ?X)))
      (reward (over next) (else 0))
      (termination (over next) (else continue)))
    """
    domain = parse_domain(text)
    state = RelState({Const("k")}, {domain.predicate("P")(Const("k"))})
    stats = introspector_plan(domain, state, 8)
    assert stats.plan.actions == ()
    assert stats.plan.status is TerminationValue.CONTINUE


def test_trace_records_milestone_search(bins_fixture):
    domain, state = bins_fixture
    trace = []
    introspector_plan(domain, state, 32, trace=trace)
    text = "\n".join(trace)
    assert "mutations=2" in trace[0]
    assert text.count("  mutation ") >= 2
    assert "@CloseBin(b1)" in text and "@CloseBin(b2)" in text
    assert "inner status=" in text


def test_nodes_account_for_inner_work(bins_fixture):
    domain, state = bins_fixture
    stats = introspector_plan(domain, state, 32)
    assert stats.nodes_expanded > 0


def test_grid_plan_reaches_origin_with_neutral_padding():
    stats = grid_introspector_plan(GridState(3, 4), 12)
    assert stats.plan.total_return == -5  # seven steps, +1 on arrival
    assert len(stats.plan.actions) in (11, 12)
    x, y = 3, 4
    from introplan.envs import GRID_ACTIONS

    for i, name in enumerate(stats.plan.actions):
        dx, dy = GRID_ACTIONS[name]
        x, y = x + dx, y + dy
        if i == 6:
            assert (x, y) == (0, 0)


def test_grid_plan_from_origin():
    stats = grid_introspector_plan(GridState(0, 0), 6)
    assert stats.plan.total_return == 0
    assert len(stats.plan.actions) == 6


def test_grid_nodes_linear_in_distance():
    small = grid_introspector_plan(GridState(5, 5), grid_horizon(10))
    large = grid_introspector_plan(GridState(10, 10), grid_horizon(20))
    assert large.nodes_expanded <= 2.5 * small.nodes_expanded
