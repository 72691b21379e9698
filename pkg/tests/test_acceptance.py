"""End-to-end acceptance checks over the builtin fixtures."""

import numpy as np
import pytest

from rarl_kit.abstraction import (
    AbstractionPair,
    FRelativeOption,
    block_occupancy,
    check_admissible,
    check_homomorphism,
    check_realizable_tuple,
    discounted_exit_probability,
    exit_mass,
    find_realizing_option,
    measure_realizability,
    option_value_multistep,
    preimage_option,
    realize_abstract_policy,
    theorem_bound_gaps,
    tilde_targets,
    value_loss_bound,
    value_of_options_from_start,
)
from rarl_kit.envs import (
    build_mirrored_arms,
    builtin,
    chain_fixture,
    random_identity_fixture,
    random_mapping,
    random_mdp,
    random_rooms,
    rooms_fixture,
)
from rarl_kit.errors import RealizationInfeasibleError
from rarl_kit.lp import build_primal_occupancy_lp, dual_objective, solve_lp
from rarl_kit.mdp import (
    DeterministicPolicy,
    SecondOrderMdp,
    evaluate_policy,
    evaluate_policy_2mdp,
    recompose_2mdp_value,
    start_value,
    value_iteration,
    value_iteration_2mdp,
    vi_iterations,
)
from rarl_kit.rarl import RarlConfig, realizer_complexity, run, sample_complexity_budget
from rarl_kit.realizer import realization_problem_for, realize_exact
from rarl_kit.simulator import Simulator

from conftest import random_second_order

GAMMA = 0.95


def optimum(mdp) -> float:
    _, policy = value_iteration(mdp, vi_iterations(mdp.gamma, 1e-12))
    return start_value(mdp, evaluate_policy(mdp, policy))


def realizable_fixtures():
    yield chain_fixture(GAMMA)
    for seed in range(5):
        yield rooms_fixture(seed)
    for seed in range(4):
        yield random_identity_fixture(seed, num_states=4 + seed)


# -------- corridor and chain numbers --------


def test_corridor_exit_occupancies_and_realizability(corridor):
    pair = corridor.pair()
    block = pair.block(0)
    right = FRelativeOption.repeat(1, 0, block.states, 1, block.num_actions)
    s1, s2 = corridor.labels["s1"], corridor.labels["s2"]
    assert discounted_exit_probability(block_occupancy(block, right, s2)[2], GAMMA) == pytest.approx(GAMMA ** 11, abs=1e-9)
    assert discounted_exit_probability(block_occupancy(block, right, s1)[2], GAMMA) == pytest.approx(GAMMA ** 21, abs=1e-9)
    report = check_realizable_tuple(pair, (1, 0, 2), right, 0.0, 0.09 * (1 - GAMMA))
    verdicts = {gap.entry: gap.occupancy_gap <= 0.09 * (1 - GAMMA) for gap in report.entries}
    assert verdicts == {s1: False, s2: True}


def test_chain_abstraction():
    fixture = chain_fixture(GAMMA)
    pair = fixture.pair()
    assert pair.abstract.transition[2, 0, 0, 1] == pytest.approx(GAMMA / (1 + GAMMA))
    measured = measure_realizability(pair)
    assert max(measured.eps_r, measured.eps_t) <= 1e-12
    assert check_admissible(pair).admissible
    assert tilde_targets(pair.abstract, 2, 0, 0, GAMMA)[0][1] == pytest.approx((1 - GAMMA) * GAMMA ** 2, abs=1e-12)
    result = check_homomorphism(fixture.ground, fixture.abstract, fixture.mapping, np.zeros((3, 1), dtype=int))
    assert result.witness == (0, 1)


# -------- identity abstractions --------


@pytest.mark.parametrize("seed", range(20))
def test_identity_abstraction_is_exact(seed):
    rng = np.random.default_rng(seed)
    num_states, num_actions = int(rng.integers(2, 9)), int(rng.integers(1, 4))
    fixture = random_identity_fixture(seed, num_states, num_actions)
    pair = fixture.pair()
    measured = measure_realizability(pair)
    assert measured.eps_r <= 1e-9
    assert measured.eps_t <= 1e-9
    assert check_admissible(pair).admissible


# -------- homomorphisms --------


@pytest.mark.parametrize(
    "length, slip, relabel",
    [(1, 0.0, False), (2, 0.1, True), (3, 0.0, True), (3, 0.25, False), (4, 0.1, True)],
)
def test_homomorphism_gives_perfect_realizability(length, slip, relabel):
    arms = build_mirrored_arms(length, slip=slip, reward_seed=length, relabel=relabel)
    assert check_homomorphism(arms.ground, arms.image, arms.mapping, arms.action_maps)
    pair = arms.pair()
    for tuple_ in pair.applicable_tuples():
        option = preimage_option(pair, *tuple_, arms.action_maps)
        assert check_realizable_tuple(pair, tuple_, option, 1e-9, 1e-9).verdict


# -------- value bounds --------


@pytest.mark.parametrize("fixture", list(realizable_fixtures()), ids=lambda f: f.name)
def test_value_bounds_on_realizable_fixtures(fixture):
    pair = fixture.pair()
    measured = measure_realizability(pair)
    bound = value_loss_bound(measured.eps_r, measured.eps_t, pair.ground.gamma, pair.abstract.gamma_bar,
                             pair.abstract.num_abstract_states)
    abstract_policy = value_iteration_2mdp(pair.abstract, vi_iterations(pair.abstract.gamma_bar, 1e-12))
    omega = realize_abstract_policy(pair, abstract_policy, measured.witnesses)
    for gap in theorem_bound_gaps(pair, abstract_policy, omega):
        assert gap.gap <= bound + 1e-9
    assert value_of_options_from_start(pair.ground, pair.mapping, omega) >= optimum(pair.ground) - bound - 1e-9


# -------- closed-form oracles --------


@pytest.mark.parametrize("seed", range(100))
def test_block_identities_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(seed, 6, 2, branching=3)
    mapping = random_mapping(seed, 6, 3)
    abstract = SecondOrderMdp.from_first_order(np.full((3, 1, 3), 1 / 3), np.zeros((3, 1)), mdp.gamma,
                                               mapping.marginal(mdp.start_distribution))
    pair = AbstractionPair(mdp, abstract, mapping)
    b = int(rng.integers(3))
    block = pair.block(b)
    s = int(rng.choice(block.states))

    # exit mass
    option = FRelativeOption(3, b, block.states, rng.dirichlet(np.ones(2), size=block.states.size))
    inside = block_occupancy(block, option, s)[b]
    sink, exits = exit_mass(block, option, s)
    assert sink == pytest.approx(mdp.gamma * (1 - inside), abs=1e-9)
    assert exits == pytest.approx((1 - inside) * (1 - mdp.gamma), abs=1e-9)

    # multistep value
    actions = rng.integers(0, 2, size=6)
    values = evaluate_policy(mdp, DeterministicPolicy(actions))
    option = FRelativeOption.deterministic(3, b, block.states, actions[block.states], 2)
    assert option_value_multistep(block, option, s, values) == pytest.approx(values[s], abs=1e-9)

    # second-order evaluation
    model = random_second_order(seed)
    policy = DeterministicPolicy(rng.integers(0, 2, size=(4, 3)))
    two_values = evaluate_policy_2mdp(model, policy)
    assert np.allclose(recompose_2mdp_value(model, policy, two_values), two_values, atol=1e-9)


# -------- LP suite --------


@pytest.mark.parametrize("seed", range(20))
def test_occupancy_lp_matches_value_iteration(seed):
    mdp = random_mdp(seed, 5, 3, branching=3)
    lp = build_primal_occupancy_lp(mdp, mdp.dummy_start)
    solution = solve_lp(lp)
    assert solution.objective / (1 - mdp.gamma) == pytest.approx(optimum(mdp), abs=1e-7)
    assert abs(dual_objective(lp, solution) - solution.objective) <= 1e-7


@pytest.mark.parametrize("seed", range(5))
def test_constrained_lp_agrees_with_enumeration(seed):
    rng = np.random.default_rng(seed)
    mdp, mapping = random_rooms(seed, num_rooms=3, room_size=2)
    model = SecondOrderMdp.from_first_order(rng.dirichlet(np.ones(3), size=(3, 2)), rng.uniform(size=(3, 2)),
                                            mdp.gamma, mapping.marginal(mdp.start_distribution))
    pair = AbstractionPair(mdp, model, mapping)
    for eps_t in (0.0, 0.02):
        for tuple_ in pair.applicable_tuples():
            enumerated = find_realizing_option(pair, tuple_, 1.0, eps_t)
            try:
                realize_exact(realization_problem_for(pair, tuple_, eps_t=eps_t))
                feasible = True
            except RealizationInfeasibleError:
                feasible = False
            # doors are the only entries, so per-entry and averaged feasibility coincide
            if enumerated.verdict:
                assert feasible


# -------- RARL end to end --------


def test_rarl_corrects_inflated_corridor():
    pair = builtin("corridor-inflated").pair()
    best = optimum(pair.ground)
    passed, corrections = 0, 0
    for seed in range(20):
        config = RarlConfig(eps_r=0.05, eps_t=0.05, eps=0.05, delta=0.1, episodes=1500,
                            min_visits=5, min_entry_samples=3, seed=seed)
        result = run(Simulator(pair.ground, seed=seed), pair, config)
        n_abs, m_abs = pair.abstract.num_abstract_states, pair.abstract.num_abstract_actions
        budget = sample_complexity_budget(config, n_abs, m_abs, realizer_complexity(config, pair))
        tolerance = value_loss_bound(config.eps_r, config.eps_t, pair.ground.gamma, pair.abstract.gamma_bar, n_abs) \
            + 3 * config.eps / (1 - pair.ground.gamma)
        loss = best - value_of_options_from_start(pair.ground, pair.mapping, result.omega)
        monotone = all(c.value_after <= c.value_before + 1e-12 for c in result.state.corrections)
        corrections += len(result.state.corrections)
        passed += loss <= tolerance and result.escapes <= budget and monotone
    assert passed >= 18
    assert corrections > 0
