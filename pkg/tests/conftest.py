"""Shared fixtures and small model builders for the rarl-kit test-suite."""

import numpy as np
import pytest

from rarl_kit.envs import chain_fixture, corridor_fixture, random_mdp, random_rooms, synthesize_admissible_abstraction
from rarl_kit.mdp import GroundMdp, SecondOrderMdp


def random_second_order(seed: int, num_states: int = 3, num_actions: int = 2, gamma_bar: float = 0.9) -> SecondOrderMdp:
    """Dense random 2-MDP (every predecessor row drawn independently)."""
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(num_states), size=(num_states + 1, num_states, num_actions))
    reward = rng.uniform(0.0, 1.0, size=(num_states + 1, num_states, num_actions))
    start = rng.dirichlet(np.ones(num_states))
    return SecondOrderMdp(transition, reward, gamma_bar, start)


def bandit(gamma: float = 0.5) -> GroundMdp:
    """One state, two self-looping arms paying 0.2 and 0.8."""
    return GroundMdp(np.ones((1, 2, 1)), np.array([[0.2, 0.8]]), gamma, np.array([1.0]))


def rooms_pair(seed: int, num_rooms: int = 3, room_size: int = 2, gamma: float = 0.9):
    from rarl_kit.abstraction import AbstractionPair

    mdp, mapping = random_rooms(seed, num_rooms, room_size, gamma=gamma)
    return AbstractionPair(mdp, synthesize_admissible_abstraction(mdp, mapping, gamma), mapping)


@pytest.fixture
def chain():
    return chain_fixture(0.95)


@pytest.fixture(scope="session")
def corridor():
    return corridor_fixture(0.95)


@pytest.fixture
def small_mdp():
    return random_mdp(0, 4, 2, branching=3, gamma=0.9)
