"""
RARL: learning with a realizable abstraction.

This module handles:
- The episode loop: plan on the abstract 2-MDP, follow known options, hand
  unknown tuples to online realizers and store their options once ready.
- Reward correction of over-optimistic tuples (abstract_one_r) with replanning.
- Escape accounting and the sample-complexity budget.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .abstraction import (
    AbstractionPair,
    AbstractTuple,
    FRelativeOption,
    Mapping,
    PolicyOfOptions,
    tilde_targets,
)
from .config import CHECK_TOL
from .errors import InitiationError, InvalidModelError, RealizationInfeasibleError
from .mdp import (
    DeterministicPolicy,
    SecondOrderMdp,
    evaluate_policy_2mdp,
    two_mdp_start_value,
    value_iteration_2mdp,
    vi_iterations,
)
from .realizer import (
    OnlineRealizer,
    RolloutResult,
    default_min_entry_samples,
    default_min_visits,
    online_realizer_for,
    realizer_episode_bound,
    rollout_cap,
)

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# CONFIG AND STATE
# ---------------------------------------------------------------------------


class RarlConfig(BaseModel):
    eps_r: float = Field(0.05, ge=0.0, le=1.0)
    eps_t: float = Field(0.05, ge=0.0, le=1.0)
    eta: float = Field(0.05, ge=0.0, le=1.0)
    lam: float = Field(0.05, ge=0.0, le=1.0)
    eps: float = Field(0.05, gt=0.0, lt=1.0)
    delta: float = Field(0.1, gt=0.0, lt=1.0)
    vi_iterations: Optional[int] = Field(None, ge=1)
    proof_vi_count: bool = True
    episodes: int = Field(1000, ge=1)
    seed: int = 0
    min_visits: Optional[int] = Field(None, ge=1)
    min_entry_samples: Optional[int] = Field(None, ge=1)
    convergence_window: int = Field(50, ge=1)


@dataclass
class EpisodeLog:
    episode: int
    discounted_return: float
    escape: bool
    known_tuples: int
    updates: int
    abstract_value: float
    seconds: float
    steps: int = 0
    explored: bool = False


@dataclass
class CorrectionRecord:
    episode: int
    tuple: AbstractTuple
    value_before: float
    value_after: float


@dataclass
class RarlState:
    """O, K, the working model and the realizers of unknown tuples."""

    model: SecondOrderMdp
    policy: DeterministicPolicy
    options: Dict[AbstractTuple, FRelativeOption] = field(default_factory=dict)
    known: Set[AbstractTuple] = field(default_factory=set)
    realizers: Dict[AbstractTuple, OnlineRealizer] = field(default_factory=dict)
    corrections: List[CorrectionRecord] = field(default_factory=list)
    relaxed: Set[AbstractTuple] = field(default_factory=set)
    episode: int = 0

    def learn(self, tuple_: AbstractTuple, option: FRelativeOption) -> None:
        if tuple_ in self.known:
            raise InvalidModelError(f"tuple {tuple_} is already realized")
        self.options[tuple_] = option
        self.known.add(tuple_)


@dataclass
class RunResult:
    omega: PolicyOfOptions
    logs: List[EpisodeLog]
    model: SecondOrderMdp
    state: RarlState
    hit_cap: bool
    vi_iterations: int
    escape_horizon: int

    def __iter__(self):
        return iter((self.omega, self.logs, self.model))

    @property
    def escapes(self) -> int:
        return sum(log.escape for log in self.logs)


# ---------------------------------------------------------------------------
# FORMULAS
# ---------------------------------------------------------------------------


def escape_horizon(gamma_bar: float, eps: float) -> int:
    """H̄ = ceil(ln(1/(ε(1-γ̄))) / (1-γ̄))."""
    return max(1, math.ceil(math.log(1.0 / (eps * (1.0 - gamma_bar))) / (1.0 - gamma_bar)))


def realizer_confidence(config: RarlConfig, num_abstract_states: int, num_abstract_actions: int) -> float:
    """δᵢ = δ / (2S̄²Ā), shared by every tuple's realizer."""
    return config.delta / (2.0 * num_abstract_states ** 2 * num_abstract_actions)


def realizer_complexity(config: RarlConfig, pair: AbstractionPair) -> int:
    """Episode bound of the online realizer on the largest block."""
    mapping = pair.mapping
    block_size = max(mapping.block(s).size for s in range(mapping.num_abstract_states))
    num_actions, gamma = pair.ground.num_actions, pair.ground.gamma
    delta_i = realizer_confidence(config, pair.abstract.num_abstract_states, pair.abstract.num_abstract_actions)
    min_visits = config.min_visits or default_min_visits(block_size, num_actions, config.lam, gamma, delta_i)
    min_entries = config.min_entry_samples or default_min_entry_samples(config.lam, delta_i)
    return realizer_episode_bound(block_size, num_actions, min_visits, min_entries)


def sample_complexity_budget(config: RarlConfig, num_abstract_states: int, num_abstract_actions: int,
                             complexity: float) -> float:
    """(2S̄²Ā/ε)(C·S̄² + ln(2S̄²Ā/δ))."""
    pairs = 2.0 * num_abstract_states ** 2 * num_abstract_actions
    return (pairs / config.eps) * (
        complexity * num_abstract_states ** 2 + math.log(pairs / config.delta)
    )


def tilde_values(model: SecondOrderMdp, gamma: Optional[float] = None) -> np.ndarray:
    """Ṽ for every tuple, shape (S̄+1, S̄, Ā); NaN where s̄p = s̄."""
    n, num_actions = model.num_abstract_states, model.num_abstract_actions
    out = np.full((n + 1, n, num_actions), np.nan)
    for p in range(n + 1):
        for s in range(n):
            if p == s:
                continue
            for a in range(num_actions):
                out[p, s, a] = tilde_targets(model, p, s, a, gamma)[1]
    return out


def abstract_one_r(model: SecondOrderMdp, tuple_: AbstractTuple, value: float) -> SecondOrderMdp:
    """
    Lower the rewards of a tuple so that its Ṽ becomes `value`.

    The tuple's own reward absorbs the correction first; when it hits zero the
    self-pair reward R̄(s̄s̄, ā) is rescaled, and every other predecessor of s̄
    is compensated (capped at 1) for that change. Raises InvalidModelError,
    leaving the model untouched, when the reward hits zero and the tuple has
    no self-loop to carry the rest.
    """
    previous, s, a = tuple_
    g = model.gamma_bar
    transition, reward = model.transition, np.array(model.reward)
    current = tilde_targets(model, previous, s, a)[1]
    if value < 0.0:
        raise InvalidModelError("corrected value must be non-negative")
    if value > current + CHECK_TOL:
        raise InvalidModelError(f"corrected value {value} exceeds Ṽ = {current}")

    def stay(p: int) -> float:
        return g * transition[p, s, a, s] / (1.0 - g * transition[s, s, a, s])

    others = [p for p in range(model.num_abstract_states + 1) if p not in (previous, s)]
    before = {p: reward[p, s, a] + stay(p) * reward[s, s, a] for p in others}

    corrected = reward[previous, s, a] + value - current
    factor = stay(previous)
    if corrected <= 0.0 and factor == 0.0:
        raise InvalidModelError(f"tuple {tuple_} has no self-loop; its reward cannot absorb the correction to {value}")
    reward[previous, s, a] = max(0.0, corrected)
    if reward[previous, s, a] == 0.0 and factor > 0.0:
        reward[s, s, a] = min(1.0, max(0.0, value / factor))
    for p in others:
        after = reward[p, s, a] + stay(p) * reward[s, s, a]
        reward[p, s, a] = min(1.0, max(0.0, reward[p, s, a] + before[p] - after))
    return model.with_reward(reward)


# ---------------------------------------------------------------------------
# ROLLOUTS
# ---------------------------------------------------------------------------


@dataclass
class OptionRollout(RolloutResult):
    trajectory: List[Tuple[int, int, float, int]] = field(default_factory=list)


def rollout_option(simulator, option: FRelativeOption, s_p: int, s: int, mapping: Mapping,
                   rng: Optional[np.random.Generator] = None, step_cap: Optional[int] = None) -> OptionRollout:
    """
    Run an option from (s_p, s) until the block changes, the episode ends or
    the step cap is hit.
    """
    if mapping(s_p) != option.previous or mapping(s) != option.abstract_state:
        raise InitiationError(f"({s_p}, {s}) is outside the initiation set of option {option.pair}")
    rng = rng if rng is not None else simulator.rng
    gamma = simulator.mdp.gamma
    step_cap = step_cap or rollout_cap(gamma)
    trajectory = []
    total, discounted = 0.0, 0.0
    while True:
        action = option.act(s, rng)
        s_next, reward, done = simulator.step(action)
        discounted += (gamma ** len(trajectory)) * reward
        total += reward
        trajectory.append((s, action, reward, s_next))
        s_p, s = s, s_next
        left = mapping(s) != option.abstract_state
        if left or done:
            return OptionRollout(s_p, s, len(trajectory), total, discounted, left, done, False, trajectory)
        if len(trajectory) >= step_cap:
            logger.debug("[RARL] option %s truncated after %d steps", option.pair, len(trajectory))
            return OptionRollout(s_p, s, len(trajectory), total, discounted, False, False, True, trajectory)


# ---------------------------------------------------------------------------
# MAIN LOOP
# ---------------------------------------------------------------------------


def _plan(model: SecondOrderMdp, iterations: int) -> Tuple[DeterministicPolicy, float]:
    policy = value_iteration_2mdp(model, iterations)
    value = two_mdp_start_value(model, evaluate_policy_2mdp(model, policy))
    return policy, value


def assemble_policy_of_options(pair: AbstractionPair, state: RarlState) -> PolicyOfOptions:
    """Ω from the options of the planned tuples; uniform placeholders where a tuple is unknown."""
    omega = PolicyOfOptions()
    num_actions = pair.ground.num_actions
    for previous, abstract_state in pair.applicable_pairs():
        tuple_ = (previous, abstract_state, state.policy(previous, abstract_state))
        if tuple_ in state.options:
            omega.set(state.options[tuple_])
            continue
        # fall back to any realized tuple of the pair before a placeholder
        known = [t for t in sorted(state.options) if t[:2] == (previous, abstract_state)]
        if known:
            omega.set(state.options[known[0]], placeholder=True)
        else:
            states = pair.mapping.block(abstract_state)
            policy = np.full((states.size, num_actions), 1.0 / num_actions)
            omega.set(FRelativeOption(previous, abstract_state, states, policy), placeholder=True)
    return omega


def run(simulator, pair: AbstractionPair, config: RarlConfig,
        initial_options: Optional[Dict[AbstractTuple, FRelativeOption]] = None) -> RunResult:
    """
    The RARL episode loop over a simulator of pair.ground.

    initial_options pre-populates the known tuples.
    """
    mapping = pair.mapping
    gamma = pair.ground.gamma
    gamma_bar = pair.abstract.gamma_bar
    dummy_ground = pair.ground.num_states
    dummy_abstract = mapping.num_abstract_states
    rng = np.random.default_rng(config.seed)

    iterations = config.vi_iterations or vi_iterations(gamma_bar, config.eps, proof=config.proof_vi_count)
    horizon = escape_horizon(gamma_bar, config.eps)
    delta_i = realizer_confidence(config, pair.abstract.num_abstract_states, pair.abstract.num_abstract_actions)
    policy, abstract_value = _plan(pair.abstract, iterations)
    state = RarlState(model=pair.abstract, policy=policy)
    for tuple_, option in (initial_options or {}).items():
        state.learn(tuple_, option)
    logger.info("[RARL] start: %d VI backups, escape horizon %d, %d known tuples",
                iterations, horizon, len(state.known))

    logs: List[EpisodeLog] = []
    quiet = 0
    hit_cap = True
    for episode in range(config.episodes):
        state.episode = episode
        started = time.perf_counter()
        s = simulator.reset()
        s_p, prev_block = dummy_ground, dummy_abstract
        escape = explored = False
        switches, steps = 0, 0
        ret, discount = 0.0, 1.0
        done = False
        concluding: Optional[OnlineRealizer] = None

        while not done:
            block = mapping(s)
            tuple_ = (prev_block, block, state.policy(prev_block, block))
            if tuple_ in state.known:
                outcome = rollout_option(simulator, state.options[tuple_], s_p, s, mapping, rng)
            else:
                explored = True
                escape = escape or switches < horizon
                realizer = state.realizers.get(tuple_)
                if realizer is None:
                    realizer = online_realizer_for(
                        pair, tuple_, eps_r=config.eps_r, eps_t=config.eps_t, eta=config.eta, lam=config.lam,
                        min_visits=config.min_visits, min_entry_samples=config.min_entry_samples, delta_i=delta_i,
                    )
                    realizer.h_targets, realizer.v_target = tilde_targets(state.model, *tuple_, gamma)
                    state.realizers[tuple_] = realizer
                outcome = realizer.rollout_control(simulator, s)
                concluding = realizer
                if realizer.enough():
                    try:
                        result = realizer.get()
                    except RealizationInfeasibleError as exc:
                        logger.warning("[RARL] tuple %s infeasible (max gap %.4g); storing the value-optimal option",
                                       tuple_, exc.max_gap)
                        result = realizer.get(relax=True)
                        state.relaxed.add(tuple_)
                    state.learn(tuple_, result.option)
                    v_opt = min(result.value + config.eps_r / (1.0 - gamma) + config.eta, 1.0 / (1.0 - gamma))
                    v_tilde = tilde_targets(state.model, *tuple_, gamma)[1]
                    logger.info("[RARL] episode %d: tuple %s realized (V̂=%.4g, Ṽ=%.4g)",
                                episode, tuple_, result.value, v_tilde)
                    if v_tilde > v_opt:
                        try:
                            state.model = abstract_one_r(state.model, tuple_, v_opt)
                        except InvalidModelError as exc:
                            logger.warning("[RARL] episode %d: correction skipped: %s", episode, exc)
                        else:
                            v_after = tilde_targets(state.model, *tuple_, gamma)[1]
                            state.corrections.append(CorrectionRecord(episode, tuple_, v_tilde, v_after))
                            state.policy, abstract_value = _plan(state.model, iterations)
                            logger.info("[RARL] episode %d: corrected %s from %.4g to %.4g",
                                        episode, tuple_, v_tilde, v_after)

            ret += discount * outcome.discounted_reward
            discount *= gamma ** outcome.steps
            steps += outcome.steps
            done = outcome.done or outcome.truncated
            if outcome.left_block:
                prev_block, s_p, s = block, outcome.previous, outcome.state
                switches += 1
            else:
                s = outcome.state
            if concluding is not None:
                break

        # at most one exploration per episode; the rest follows the realizer's exploration policy
        if concluding is not None:
            while not simulator.done:
                s_next, reward, _ = simulator.step(concluding.exploration_action(s, rng))
                ret += discount * reward
                discount *= gamma
                steps += 1
                s = s_next

        logs.append(EpisodeLog(
            episode=episode,
            discounted_return=ret,
            escape=escape,
            known_tuples=len(state.known),
            updates=len(state.corrections),
            abstract_value=abstract_value,
            seconds=time.perf_counter() - started,
            steps=steps,
            explored=explored,
        ))
        logger.debug("[RARL] episode %d: return %.4f, escape %s, |K|=%d", episode, ret, escape, len(state.known))

        quiet = 0 if explored else quiet + 1
        if quiet >= config.convergence_window:
            hit_cap = False
            logger.info("[RARL] converged after %d episodes", episode + 1)
            break

    for tuple_, realizer in sorted(state.realizers.items()):
        logger.info("[RARL] tuple %s: %d entries, drift %.3f", tuple_, len(realizer.entry_log), realizer.entry_drift())
    if hit_cap:
        logger.warning("[RARL] episode cap %d reached before convergence", config.episodes)

    omega = assemble_policy_of_options(pair, state)
    return RunResult(
        omega=omega,
        logs=logs,
        model=state.model,
        state=state,
        hit_cap=hit_cap,
        vi_iterations=iterations,
        escape_horizon=horizon,
    )
