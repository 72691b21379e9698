import numpy as np
import pytest

from rarl_kit.abstraction import (
    AbstractionPair,
    FRelativeOption,
    Mapping,
    PolicyOfOptions,
    block_occupancy,
    block_value,
    check_admissible,
    check_bisimulation,
    check_homomorphism,
    check_realizable_from,
    check_realizable_tuple,
    discounted_exit_probability,
    dominating_abstract_policy,
    evaluate_policy_of_options,
    exit_mass,
    find_realizing_option,
    homomorphism_relation,
    horizon_feasibility,
    measure_realizability,
    option_value_multistep,
    preimage_option,
    realize_abstract_policy,
    theorem_bound_gaps,
    tilde_targets,
    value_loss_bound,
    value_of_options_from_start,
)
from rarl_kit.envs import build_mirrored_arms, random_mdp
from rarl_kit.errors import InitiationError, MappingError
from rarl_kit.mdp import (
    evaluate_policy,
    evaluate_policy_2mdp,
    identity_abstract_model,
    start_value,
    two_mdp_start_value,
    value_iteration,
    value_iteration_2mdp,
    vi_iterations,
)

from conftest import rooms_pair

GAMMA = 0.95
RIGHT = 1


def go_right(pair: AbstractionPair, previous: int = 1) -> FRelativeOption:
    block = pair.block(0)
    return FRelativeOption.repeat(previous, 0, block.states, RIGHT, block.num_actions)


# -------- mappings, entries and blocks --------


def test_mapping_must_be_surjective():
    with pytest.raises(MappingError):
        Mapping(np.array([0, 0, 2]), 3)


def test_mapping_sends_dummy_to_dummy():
    mapping = Mapping(np.array([0, 1, 1]), 2)
    assert mapping(3) == 2
    assert mapping.marginal(np.array([0.2, 0.3, 0.5])).tolist() == pytest.approx([0.2, 0.8])


def test_corridor_entries_and_pairs(corridor):
    pair = corridor.pair()
    s1, s2 = corridor.labels["s1"], corridor.labels["s2"]
    assert pair.entries(1, 0).tolist() == sorted([s1, s2])
    assert pair.entries(3, 1).tolist() == [corridor.labels["start"]]
    assert pair.entries(0, 2).tolist() == [corridor.labels["goal"]]
    assert pair.applicable_pairs() == [(0, 1), (0, 2), (1, 0), (3, 1)]


def test_block_mdp_layout(corridor):
    block = corridor.pair().block(0)
    assert block.num_block_states == 22
    assert block.num_local_states == 22 + block.exits.size + 1
    assert set(block.exit_blocks.tolist()) == {1, 2}
    assert block.local_blocks[-1] == 3
    # exits and the sink both feed the sink
    assert np.all(block.mdp.transition[block.num_block_states:, :, block.sink] == 1.0)
    assert np.all(block.mdp.reward[block.num_block_states:] == 0.0)


def test_exit_occupancy_along_the_corridor(corridor):
    pair = corridor.pair()
    block = pair.block(0)
    option = go_right(pair)
    h1 = block_occupancy(block, option, corridor.labels["s1"])
    h2 = block_occupancy(block, option, corridor.labels["s2"])
    assert h1[2] == pytest.approx((1 - GAMMA) * GAMMA ** 21)
    assert h2[2] == pytest.approx((1 - GAMMA) * GAMMA ** 11)
    assert discounted_exit_probability(h2[2], GAMMA) == pytest.approx(GAMMA ** 11)
    assert h1.sum() == pytest.approx(1.0)


def test_exit_and_sink_mass_identity(corridor):
    pair = corridor.pair()
    block = pair.block(0)
    sink, exits = exit_mass(block, go_right(pair), corridor.labels["s1"])
    assert sink == pytest.approx(GAMMA * exits / (1 - GAMMA))


def test_multistep_value_adds_discounted_exit_values(corridor):
    pair = corridor.pair()
    block = pair.block(0)
    option = go_right(pair)
    s1 = corridor.labels["s1"]
    exit_values = np.zeros(corridor.ground.num_states)
    assert option_value_multistep(block, option, s1, exit_values) == pytest.approx(block_value(block, option, s1))
    exit_values[corridor.labels["goal"]] = 1.0 / (1 - GAMMA)
    assert option_value_multistep(block, option, s1, exit_values) == pytest.approx(GAMMA ** 21 / (1 - GAMMA))


def test_option_rejects_states_outside_block(corridor):
    pair = corridor.pair()
    with pytest.raises(InitiationError):
        block_occupancy(pair.block(0), go_right(pair), corridor.labels["start"])


# -------- targets and realizability --------


def test_chain_targets(chain):
    h, value = tilde_targets(chain.abstract, 2, 0, 0, GAMMA)
    assert h[1] == pytest.approx((1 - GAMMA) * GAMMA ** 2, abs=1e-12)
    assert h[0] == 0.0
    assert value == 0.0


def test_chain_is_perfectly_realizable_and_admissible(chain):
    pair = chain.pair()
    measured = measure_realizability(pair)
    assert measured.eps_r <= 1e-12
    assert measured.eps_t <= 1e-12
    assert check_admissible(pair).admissible


def test_corridor_tuple_fails_at_far_entry(corridor):
    pair = corridor.pair()
    eps_t = 0.09 * (1 - GAMMA)
    report = check_realizable_tuple(pair, (1, 0, 2), go_right(pair), eps_r=0.0, eps_t=eps_t)
    assert not report.verdict
    assert report.worst_entry == corridor.labels["s1"]
    by_entry = {gap.entry: gap for gap in report.entries}
    assert by_entry[corridor.labels["s2"]].occupancy_gap <= eps_t
    assert by_entry[corridor.labels["s1"]].occupancy_gap == pytest.approx(0.6 * (1 - GAMMA) - (1 - GAMMA) * GAMMA ** 21)


def test_realizable_from_distribution_on_near_entry(corridor):
    pair = corridor.pair()
    nu = np.zeros(corridor.ground.num_states)
    nu[corridor.labels["s2"]] = 1.0
    report = check_realizable_from(pair, (1, 0, 2), nu, go_right(pair), eps_r=0.0, eps_t=0.09 * (1 - GAMMA))
    assert report.verdict


def test_option_for_other_pair_is_rejected(corridor):
    pair = corridor.pair()
    with pytest.raises(InitiationError):
        check_realizable_tuple(pair, (0, 1, 0), go_right(pair), 0.1, 0.1)


@pytest.mark.parametrize("seed", range(3))
def test_synthesized_rooms_are_realizable_and_admissible(seed):
    pair = rooms_pair(seed)
    measured = measure_realizability(pair)
    assert measured.eps_r <= 1e-9
    assert measured.eps_t <= 1e-9
    assert check_admissible(pair).admissible


def test_find_realizing_option_reports_witness():
    pair = rooms_pair(0)
    tuple_ = pair.applicable_tuples()[0]
    report = find_realizing_option(pair, tuple_, 1e-9, 1e-9)
    assert report.verdict
    assert report.witness.pair == tuple_[:2]


# -------- policies of options and value bounds --------


def test_realized_policy_is_near_optimal_on_rooms():
    pair = rooms_pair(1)
    measured = measure_realizability(pair)
    abstract_policy = value_iteration_2mdp(pair.abstract, vi_iterations(pair.abstract.gamma_bar, 1e-12))
    omega = realize_abstract_policy(pair, abstract_policy, measured.witnesses)
    _, ground_policy = value_iteration(pair.ground, vi_iterations(pair.ground.gamma, 1e-12))
    optimum = start_value(pair.ground, evaluate_policy(pair.ground, ground_policy))
    assert value_of_options_from_start(pair.ground, pair.mapping, omega) >= optimum - 1e-6

    bound = value_loss_bound(measured.eps_r, measured.eps_t, pair.ground.gamma,
                             pair.abstract.gamma_bar, pair.abstract.num_abstract_states)
    for gap in theorem_bound_gaps(pair, abstract_policy, omega):
        assert gap.gap <= bound + 1e-6


def test_dominating_policy_is_optimistic():
    pair = rooms_pair(2)
    _, ground_policy = value_iteration(pair.ground, vi_iterations(pair.ground.gamma, 1e-12))
    optimum = start_value(pair.ground, evaluate_policy(pair.ground, ground_policy))
    abstract_policy = dominating_abstract_policy(pair, ground_policy)
    values = evaluate_policy_2mdp(pair.abstract, abstract_policy)
    assert two_mdp_start_value(pair.abstract, values) >= optimum - 1e-8


def test_identity_options_reproduce_ground_values():
    mdp = random_mdp(4, 4, 2, branching=2)
    pair = AbstractionPair(mdp, identity_abstract_model(mdp), Mapping.identity(4))
    _, policy = value_iteration(mdp, 200)
    omega = PolicyOfOptions()
    for previous, abstract_state in pair.applicable_pairs():
        block = pair.block(abstract_state)
        omega.set(FRelativeOption.repeat(previous, abstract_state, block.states,
                                         policy(abstract_state), mdp.num_actions))
    values = evaluate_policy_of_options(mdp, pair.mapping, omega)
    assert start_value(mdp, values[4]) == pytest.approx(start_value(mdp, evaluate_policy(mdp, policy)))


def test_value_loss_bound_formula():
    assert value_loss_bound(0.1, 0.0, 0.9, 0.9, 3) == pytest.approx(0.1 / 0.01)
    assert value_loss_bound(0.0, 0.01, 0.9, 0.5, 3) == pytest.approx(0.03 / (0.01 * 0.5))


def test_horizon_feasibility_on_chain(chain):
    pair = chain.pair()
    option = FRelativeOption.repeat(2, 0, pair.block(0).states, 0, 1)
    report = horizon_feasibility(pair, (2, 0, 0), option, 0)
    assert report.holds
    assert report.stay_occupancy == pytest.approx((1 - GAMMA) * (1 + GAMMA))


# -------- homomorphisms and bisimulation --------


def test_chain_merge_is_not_a_homomorphism(chain):
    result = check_homomorphism(chain.ground, chain.abstract, chain.mapping, np.zeros((3, 1), dtype=int))
    assert not result
    assert result.reason == "transition-pair"
    assert result.witness == (0, 1)


@pytest.mark.parametrize("relabel", [False, True])
def test_mirrored_arms_fold_by_homomorphism(relabel):
    arms = build_mirrored_arms(3, slip=0.1, reward_seed=5, relabel=relabel)
    assert check_homomorphism(arms.ground, arms.image, arms.mapping, arms.action_maps)


def test_bisimulation_needs_matching_labels():
    plain = build_mirrored_arms(3, reward_seed=5)
    assert check_bisimulation(plain.ground, plain.image, homomorphism_relation(plain.mapping))
    swapped = build_mirrored_arms(3, reward_seed=5, relabel=True)
    result = check_bisimulation(swapped.ground, swapped.image, homomorphism_relation(swapped.mapping))
    assert not result
    assert result.witness[0] > 3  # a right-arm state


def test_homomorphic_image_preserves_optimal_value():
    arms = build_mirrored_arms(3, slip=0.1, reward_seed=2)
    _, policy = value_iteration(arms.ground, 400)
    _, image_policy = value_iteration(arms.image, 400)
    ground_values = evaluate_policy(arms.ground, policy)
    image_values = evaluate_policy(arms.image, image_policy)
    assert ground_values == pytest.approx(image_values[arms.mapping.assignment])


def test_homomorphism_preimage_options_realize_exactly():
    arms = build_mirrored_arms(2, slip=0.2, reward_seed=1, relabel=True)
    pair = arms.pair()
    for previous, abstract_state, action in pair.applicable_tuples():
        option = preimage_option(pair, previous, abstract_state, action, arms.action_maps)
        report = check_realizable_tuple(pair, (previous, abstract_state, action), option, 1e-9, 1e-9)
        assert report.verdict
