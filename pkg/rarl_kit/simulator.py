"""
Sampling oracle over a GroundMdp.

Episodes start from ν₀ and stop geometrically: after every step the episode
ends with probability 1-γ, so undiscounted returns estimate discounted values.
A hard cap of EPISODE_CAP_FACTOR/(1-γ) steps bounds the tail.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .config import EPISODE_CAP_FACTOR
from .errors import RarlKitError
from .mdp import GroundMdp

logger = logging.getLogger(__name__)


class EpisodeOverError(RarlKitError, RuntimeError):
    """step() was called after the episode ended."""


class Simulator:
    def __init__(self, mdp: GroundMdp, seed: Optional[int] = None,
                 geometric_stop: bool = True, step_cap: Optional[int] = None):
        self.mdp = mdp
        self.rng = np.random.default_rng(seed)
        self.geometric_stop = geometric_stop
        self.step_cap = step_cap or math.ceil(EPISODE_CAP_FACTOR / (1.0 - mdp.gamma))
        self.state: Optional[int] = None
        self.steps = 0
        self.total_steps = 0
        self.episodes = 0
        self.done = True

    def reset(self) -> int:
        self.state = int(self.rng.choice(self.mdp.num_states, p=self.mdp.start_distribution))
        self.steps = 0
        self.done = False
        self.episodes += 1
        return self.state

    def step(self, action: int) -> Tuple[int, float, bool]:
        if self.done:
            raise EpisodeOverError("episode is over; call reset()")
        s = self.state
        reward = float(self.mdp.reward[s, action])
        s_next = int(self.rng.choice(self.mdp.num_states, p=self.mdp.transition[s, action]))
        self.steps += 1
        self.total_steps += 1
        stop = self.geometric_stop and self.rng.random() >= self.mdp.gamma
        if self.steps >= self.step_cap:
            logger.debug("[ENV] episode hit the step cap (%d)", self.step_cap)
            stop = True
        self.state = s_next
        self.done = stop
        return s_next, reward, stop
