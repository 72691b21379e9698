import numpy as np
import pytest

from rarl_kit.abstraction import AbstractionPair, check_admissible, compute_entries_exits
from rarl_kit.envs import (
    BUILTINS,
    GridWorldSpec,
    build_chain,
    build_corridor_grid,
    build_mirrored_arms,
    build_two_region_grid,
    builtin,
    corridor_abstraction,
    random_mapping,
    random_mdp,
    random_rooms,
    synthesize_admissible_abstraction,
)
from rarl_kit.errors import InvalidModelError, SynthesisError


def test_corridor_shape_and_goal():
    mdp, mapping = build_corridor_grid()
    assert mapping.num_abstract_states == 3
    assert mapping.block(2).size == 1
    goal = int(mapping.block(2)[0])
    assert np.all(mdp.transition[goal, :, goal] == 1.0)
    assert np.all(mdp.reward[goal] == 1.0)
    assert mdp.reward.sum() == 4.0


def test_corridor_abstraction_hits_exit_target():
    gamma = 0.95
    model = corridor_abstraction(gamma, target=0.6)
    p = model.transition[0, 0, 2, 2]
    assert p == pytest.approx(0.03 / 0.38)
    # discounted probability of ever moving on
    assert gamma * p / (1 - gamma * (1 - p)) == pytest.approx(0.6)
    assert model.is_first_order()


def test_corridor_abstraction_rejects_unreachable_target():
    with pytest.raises(InvalidModelError):
        corridor_abstraction(0.5, target=0.99)


def test_slip_spreads_mass():
    mdp, _ = build_corridor_grid(slip=0.2)
    assert np.allclose(mdp.transition.sum(axis=2), 1.0)
    assert (mdp.transition > 0).sum() > (build_corridor_grid()[0].transition > 0).sum()


def test_two_region_entries():
    mdp, mapping = build_two_region_grid()
    sets = compute_entries_exits(mdp, mapping)
    assert len(sets.entries[(1, 0)]) == 3
    assert len(sets.exits[0]) == 5


def test_grid_spec_requires_colours():
    with pytest.raises(ValueError):
        GridWorldSpec(height=1, width=2, coloring={(0, 0): 0}, start_cells=[(0, 0)])


def test_chain_numbers():
    gamma = 0.9
    mdp, mapping, model = build_chain(gamma)
    assert model.transition[0, 0, 0, 1] == pytest.approx(gamma / (1 + gamma))
    assert mapping.assignment.tolist() == [0, 0, 1]
    assert mdp.start_distribution.tolist() == [1.0, 0.0, 0.0]


def test_random_mdp_is_reproducible():
    a = random_mdp(7, 5, 3, branching=2)
    b = random_mdp(7, 5, 3, branching=2)
    assert np.array_equal(a.transition, b.transition)
    assert np.all((a.transition > 0).sum(axis=2) == 2)


def test_random_mapping_is_surjective():
    mapping = random_mapping(3, 10, 4)
    assert sorted(set(mapping.assignment.tolist())) == [0, 1, 2, 3]
    with pytest.raises(InvalidModelError):
        random_mapping(0, 2, 3)


def test_rooms_are_entered_through_doors():
    mdp, mapping = random_rooms(5, num_rooms=3, room_size=3)
    sets = compute_entries_exits(mdp, mapping)
    for (previous, room), entries in sets.entries.items():
        assert entries <= {room * 3}


def test_mirrored_arms_layout():
    arms = build_mirrored_arms(4, reward_seed=1)
    assert arms.ground.num_states == 9
    assert arms.image.num_states == 5
    assert arms.mapping.assignment.tolist() == [0, 1, 2, 3, 4, 1, 2, 3, 4]
    assert np.all(arms.image.reward[4] == 1.0)


def test_synthesized_model_is_first_order_and_admissible():
    mdp, mapping = random_rooms(1, 3, 2)
    model = synthesize_admissible_abstraction(mdp, mapping, mdp.gamma)
    assert model.is_first_order()
    assert model.abstract_start.tolist() == [1.0, 0.0, 0.0]
    assert check_admissible(AbstractionPair(mdp, model, mapping)).admissible


def test_synthesis_reports_minimal_discount():
    mdp, mapping = random_rooms(1, 3, 2, gamma=0.9)
    with pytest.raises(SynthesisError) as info:
        synthesize_admissible_abstraction(mdp, mapping, 0.1)
    assert info.value.min_gamma_bar is not None
    assert 0.1 < info.value.min_gamma_bar <= 0.9
    model = synthesize_admissible_abstraction(mdp, mapping, info.value.min_gamma_bar)
    assert model.gamma_bar == pytest.approx(info.value.min_gamma_bar)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_build(name):
    fixture = builtin(name, seed=1)
    assert fixture.mapping.num_states == fixture.ground.num_states
    if fixture.abstract is not None:
        assert fixture.pair().abstract.num_abstract_states == fixture.mapping.num_abstract_states


def test_unknown_builtin():
    with pytest.raises(InvalidModelError):
        builtin("maze")
