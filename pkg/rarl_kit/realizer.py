"""
Option synthesis for abstract tuples.

This module handles:
- RealizationProblem: a block MDP, an entry distribution and the h̃/Ṽ targets.
- realize_exact: solve the constrained occupancy LP and certify the result.
- OnlineRealizer: the Rollout / Enough / Get realizer used by RARL, which
  estimates the block model from counts and then solves it exactly.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .abstraction import (
    AbstractionPair,
    AbstractTuple,
    BlockMdp,
    EntryGap,
    FRelativeOption,
    Mapping,
    RealizabilityReport,
    check_realizable_tuple,
    option_from_policy,
    solve_block,
    tilde_targets,
)
from .config import CHECK_TOL, MIN_VISITS_CAP, ROLLOUT_CAP_ACCURACY
from .errors import InvalidModelError, NotEnoughDataError, RealizationInfeasibleError
from .lp import (
    build_constrained_realization_lp,
    build_primal_occupancy_lp,
    extract_policy_from_occupancy,
    local_distribution,
    solve_lp,
)
from .mdp import GroundMdp

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# PROBLEMS AND RESULTS
# ---------------------------------------------------------------------------


class RealizationProblem(BaseModel):
    """Constraints h_ν(s̄') ≥ h̃(s̄') - εT with objective V_ν; ν is ground-indexed."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    block: BlockMdp
    nu: np.ndarray
    h_targets: np.ndarray
    v_target: float
    eps_r: float = Field(0.0, ge=0.0, le=1.0)
    eps_t: float = Field(0.0, ge=0.0, le=1.0)
    eta: float = Field(0.0, ge=0.0, le=1.0)
    lam: float = Field(0.0, ge=0.0, le=1.0)
    previous: int = 0
    action: int = 0

    @model_validator(mode="after")
    def check_support(self) -> "RealizationProblem":
        # raises InvalidModelError when ν leaves the block
        local_distribution(self.block, self.nu)
        if self.h_targets.shape != (self.block.num_abstract_states,):
            raise InvalidModelError("h_targets must have one entry per abstract state")
        return self

    @property
    def tuple(self) -> AbstractTuple:
        return (self.previous, self.block.abstract_state, self.action)


@dataclass
class RealizationResult:
    """
    certificate maps each target block to h_ν(s̄') - (h̃(s̄') - εT), recomputed
    from the returned option.
    """

    option: FRelativeOption
    value: float
    certificate: Dict[int, float]
    stochastic: bool
    value_gap: float
    uniform_states: List[int] = field(default_factory=list)
    empirical: bool = False

    @property
    def min_slack(self) -> float:
        return min(self.certificate.values(), default=0.0)


def realization_problem_for(pair: AbstractionPair, tuple_: AbstractTuple, nu: Optional[np.ndarray] = None,
                            eps_r: float = 0.0, eps_t: float = 0.0, eta: float = 0.0,
                            lam: float = 0.0) -> RealizationProblem:
    """Problem of a tuple of an abstraction; ν defaults to uniform over the entries."""
    previous, abstract_state, action = tuple_
    entries = pair.entries(previous, abstract_state)
    if nu is None:
        if entries.size == 0:
            raise InvalidModelError(f"pair {(previous, abstract_state)} has no entries")
        nu = np.zeros(pair.ground.num_states)
        nu[entries] = 1.0 / entries.size
    h_targets, v_target = tilde_targets(pair.abstract, previous, abstract_state, action, pair.ground.gamma)
    return RealizationProblem(
        block=pair.block(abstract_state),
        nu=np.asarray(nu, dtype=float),
        h_targets=h_targets,
        v_target=v_target,
        eps_r=eps_r,
        eps_t=eps_t,
        eta=eta,
        lam=lam,
        previous=previous,
        action=action,
    )


def _best_single_target(block: BlockMdp, nu_local: np.ndarray, target: int) -> float:
    """max over policies of h_ν(target)."""
    aux = np.zeros((block.num_local_states, block.num_actions))
    aux[block.local_blocks == target] = 1.0
    lp = build_primal_occupancy_lp(block.mdp.with_reward(aux), nu_local)
    solution = solve_lp(lp)
    return solution.objective if solution.optimal else 0.0


def certify(problem: RealizationProblem, option: FRelativeOption) -> Dict[int, float]:
    block = problem.block
    solution = solve_block(block, option)
    nu_local = local_distribution(block, problem.nu)
    h_nu = nu_local @ solution.occupancy_by_block
    return {
        other: float(h_nu[other] - (problem.h_targets[other] - problem.eps_t))
        for other in range(block.num_abstract_states)
        if other != block.abstract_state
    }


def realize_exact(problem: RealizationProblem, empirical: bool = False) -> RealizationResult:
    """
    Solve the constrained realization LP of a problem.

    Raises RealizationInfeasibleError carrying the largest single-target gap
    h̃(s̄') - max_π h_ν(s̄') when no option meets the occupancy constraints.
    """
    block = problem.block
    lp = build_constrained_realization_lp(block, problem.nu, problem.h_targets, problem.eps_t)
    solution = solve_lp(lp)
    if not solution.optimal:
        nu_local = local_distribution(block, problem.nu)
        gaps = [
            float(problem.h_targets[t] - _best_single_target(block, nu_local, t))
            for t in lp.ge_labels
        ]
        max_gap = max(gaps, default=0.0)
        logger.info("[REALIZE] tuple %s infeasible at eps_t=%.4g (max gap %.4g)", problem.tuple, problem.eps_t, max_gap)
        raise RealizationInfeasibleError(
            f"tuple {problem.tuple} is not realizable from ν at eps_t={problem.eps_t} (max gap {max_gap:.6g})",
            max_gap,
            problem.tuple,
        )

    extracted = extract_policy_from_occupancy(solution.x, block.mdp)
    option = option_from_policy(block, problem.previous, extracted.policy, local=True)
    value = solution.objective / (1.0 - block.gamma)
    value_gap = (1.0 - block.gamma) * (problem.v_target - value)
    certificate = certify(problem, option)
    if value_gap > problem.eps_r + CHECK_TOL:
        logger.warning("[REALIZE] tuple %s value gap %.4g exceeds eps_r=%.4g", problem.tuple, value_gap, problem.eps_r)
    uniform = [int(block.ground_index[i]) for i in extracted.uniform_states if i < block.num_block_states]
    return RealizationResult(
        option=option,
        value=float(value),
        certificate=certificate,
        stochastic=not option.is_deterministic,
        value_gap=float(value_gap),
        uniform_states=uniform,
        empirical=empirical,
    )


def round_option(option: FRelativeOption) -> FRelativeOption:
    """Deterministic rounding: the most likely action per state (lowest index on ties)."""
    actions = np.argmax(option.policy, axis=1)
    return FRelativeOption.deterministic(option.previous, option.abstract_state, option.states,
                                         actions, option.num_actions)


def screen_tuple(pair: AbstractionPair, tuple_: AbstractTuple, eps_r: float, eps_t: float) -> RealizabilityReport:
    """
    LP-based realizability check for blocks too large to enumerate.

    Each entry is solved on its own first: an entry whose constrained LP is
    infeasible, or whose best value misses Ṽ by more than εR, refutes the
    tuple. Otherwise the option realized from the uniform entry distribution
    is checked at every entry; when it fails there the verdict is undecided.
    """
    previous, abstract_state, action = tuple_
    entries = pair.entries(previous, abstract_state)
    report = RealizabilityReport(previous=previous, abstract_state=abstract_state, action=action)
    if entries.size == 0:
        report.vacuous = True
        return report

    refuted = False
    for s in entries:
        nu = np.zeros(pair.ground.num_states)
        nu[s] = 1.0
        problem = realization_problem_for(pair, tuple_, nu, eps_r, eps_t)
        try:
            result = realize_exact(problem)
        except RealizationInfeasibleError as exc:
            report.entries.append(EntryGap(entry=int(s), value_gap=0.0, occupancy_gap=exc.max_gap))
            refuted = True
            continue
        gap = EntryGap(entry=int(s), value_gap=result.value_gap, occupancy_gap=eps_t - result.min_slack)
        report.entries.append(gap)
        refuted = refuted or result.value_gap > eps_r + CHECK_TOL

    if refuted:
        report.verdict = False
        report.value_gap = max(e.value_gap for e in report.entries)
        report.occupancy_gap = max(e.occupancy_gap for e in report.entries)
        worst = max(report.entries, key=lambda e: max(e.value_gap - eps_r, e.occupancy_gap - eps_t))
        report.worst_entry = worst.entry
        logger.info("[REALIZE] tuple %s refuted at entry %d", tuple_, worst.entry)
        return report

    try:
        joint = realize_exact(realization_problem_for(pair, tuple_, None, eps_r, eps_t))
    except RealizationInfeasibleError:
        report.verdict = False
        report.decided = False
        return report
    checked = check_realizable_tuple(pair, tuple_, joint.option, eps_r, eps_t)
    checked.decided = checked.verdict
    return checked


# ---------------------------------------------------------------------------
# SCHEDULES
# ---------------------------------------------------------------------------


def default_min_visits(block_size: int, num_actions: int, lam: float, gamma: float, delta_i: float) -> int:
    """Hoeffding count per (s, a): ln(2nA/δᵢ) / (2(λ(1-γ)/n)²), capped."""
    if lam <= 0.0:
        return MIN_VISITS_CAP
    accuracy = lam * (1.0 - gamma) / block_size
    count = math.ceil(math.log(2.0 * block_size * num_actions / delta_i) / (2.0 * accuracy ** 2))
    return int(min(max(count, 1), MIN_VISITS_CAP))


def default_min_entry_samples(lam: float, delta_i: float) -> int:
    if lam <= 0.0:
        return MIN_VISITS_CAP
    count = math.ceil(math.log(2.0 / delta_i) / (2.0 * lam ** 2))
    return int(min(max(count, 1), MIN_VISITS_CAP))


def rollout_cap(gamma: float) -> int:
    """Steps after which the discounted tail is below ROLLOUT_CAP_ACCURACY."""
    return math.ceil(math.log(1.0 / ((1.0 - gamma) * ROLLOUT_CAP_ACCURACY)) / (1.0 - gamma))


def realizer_episode_bound(block_size: int, num_actions: int, min_visits: int, min_entry_samples: int) -> int:
    """Samples one online realizer collects before it can answer."""
    return block_size * num_actions * min_visits + min_entry_samples


# ---------------------------------------------------------------------------
# ONLINE REALIZER
# ---------------------------------------------------------------------------


@dataclass
class RolloutResult:
    previous: int
    state: int
    steps: int
    reward: float
    discounted_reward: float
    left_block: bool
    done: bool
    truncated: bool


class OnlineRealizer:
    """
    Model-based online realizer of one tuple.

    Counts in-block transitions and rewards while exploring with the
    least-visited action; get() builds the empirical block MDP (unvisited
    pairs jump to the sink with zero reward) and solves it with εT tightened
    by model_error_allowance().
    """

    def __init__(
        self,
        mapping: Mapping,
        tuple_: AbstractTuple,
        h_targets: np.ndarray,
        v_target: float,
        gamma: float,
        num_actions: int,
        eps_r: float = 0.0,
        eps_t: float = 0.0,
        eta: float = 0.0,
        lam: float = 0.0,
        min_visits: Optional[int] = None,
        min_entry_samples: Optional[int] = None,
        delta_i: float = 0.1,
    ):
        self.mapping = mapping
        self.tuple = tuple_
        self.previous, self.abstract_state, self.action = tuple_
        self.h_targets = np.asarray(h_targets, dtype=float)
        self.v_target = float(v_target)
        self.gamma = gamma
        self.num_actions = num_actions
        self.eps_r, self.eps_t, self.eta, self.lam = eps_r, eps_t, eta, lam
        self.delta_i = delta_i
        self.states = mapping.block(self.abstract_state)
        self._rows = {int(s): i for i, s in enumerate(self.states)}
        n, num_states = self.states.size, mapping.num_states
        self.min_visits = min_visits or default_min_visits(n, num_actions, lam, gamma, delta_i)
        self.min_entry_samples = min_entry_samples or default_min_entry_samples(lam, delta_i)
        self.step_cap = rollout_cap(gamma)

        self.visits = np.zeros((n, num_actions), dtype=np.int64)
        self.transitions = np.zeros((n, num_actions, num_states), dtype=np.int64)
        self.reward_sums = np.zeros((n, num_actions))
        self.entry_counts = np.zeros(n, dtype=np.int64)
        self.entry_log: List[int] = []
        self.seen = np.zeros(n, dtype=bool)
        self.truncations = 0

    # -------- data collection --------

    def in_block(self, s: int) -> bool:
        return s in self._rows

    def exploration_action(self, s: int, rng: Optional[np.random.Generator] = None) -> int:
        """Least-visited action in the block (lowest index on ties), uniform elsewhere."""
        if self.in_block(s):
            return int(np.argmin(self.visits[self._rows[s]]))
        if rng is None:
            return 0
        return int(rng.integers(self.num_actions))

    def record_entry(self, s: int) -> None:
        row = self._rows[s]
        self.entry_counts[row] += 1
        self.entry_log.append(s)
        self.seen[row] = True

    def observe(self, s: int, action: int, reward: float, s_next: int) -> None:
        row = self._rows[s]
        self.visits[row, action] += 1
        self.transitions[row, action, s_next] += 1
        self.reward_sums[row, action] += reward
        self.seen[row] = True
        if self.in_block(s_next):
            self.seen[self._rows[s_next]] = True

    def rollout_control(self, simulator, s: int) -> RolloutResult:
        """
        Explore from entry s until the block is left, the episode ends or the
        step cap is hit; returns the last two states.
        """
        if not self.in_block(s):
            raise InvalidModelError(f"rollout must start inside block {self.abstract_state}, got {s}")
        self.record_entry(s)
        steps, total, discounted = 0, 0.0, 0.0
        while True:
            action = self.exploration_action(s)
            s_next, reward, done = simulator.step(action)
            self.observe(s, action, reward, s_next)
            discounted += (self.gamma ** steps) * reward
            total += reward
            steps += 1
            previous, s = s, s_next
            left = not self.in_block(s)
            if left or done:
                return RolloutResult(previous, s, steps, total, discounted, left, done, False)
            if steps >= self.step_cap:
                self.truncations += 1
                logger.debug("[ONLINE] tuple %s rollout truncated after %d steps", self.tuple, steps)
                return RolloutResult(previous, s, steps, total, discounted, False, False, True)

    # -------- answers --------

    def enough(self) -> bool:
        if self.entry_counts.sum() < self.min_entry_samples:
            return False
        return bool(np.all(self.visits[self.seen] >= self.min_visits))

    def entry_distribution(self) -> np.ndarray:
        nu = np.zeros(self.mapping.num_states)
        total = self.entry_counts.sum()
        if total:
            nu[self.states] = self.entry_counts / total
        return nu

    def empirical_block(self) -> BlockMdp:
        n, num_actions = self.states.size, self.num_actions
        outside = self.mapping.assignment != self.abstract_state
        exits = np.flatnonzero(outside & (self.transitions.sum(axis=(0, 1)) > 0))
        m = exits.size
        size = n + m + 1
        sink = size - 1

        transition = np.zeros((size, num_actions, size))
        reward = np.zeros((size, num_actions))
        visited = self.visits > 0
        counts = self.transitions.astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            probs = counts / self.visits[:, :, None]
        probs[~visited] = 0.0
        transition[:n, :, :n] = probs[:, :, self.states]
        transition[:n, :, n:n + m] = probs[:, :, exits]
        transition[:n][~visited] = 0.0
        transition[:n, :, sink][~visited] = 1.0
        transition[n:, :, sink] = 1.0
        transition[:n] /= transition[:n].sum(axis=2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            means = np.where(visited, self.reward_sums / np.maximum(self.visits, 1), 0.0)
        reward[:n] = np.clip(means, 0.0, 1.0)
        start = np.zeros(size)
        start[:n] = 1.0 / n
        return BlockMdp(
            abstract_state=self.abstract_state,
            states=self.states,
            exits=exits,
            exit_blocks=self.mapping.assignment[exits],
            mdp=GroundMdp(transition, reward, self.gamma, start),
            num_abstract_states=self.mapping.num_abstract_states,
        )

    def model_error_allowance(self) -> float:
        """
        (1-γ) times the Hoeffding L1 error of the least-visited seen row,
        n·sqrt(ln(2nA/δᵢ) / (2N)), capped at 1.
        """
        visited = self.visits[self.seen]
        if visited.size == 0 or visited.min() == 0:
            return 1.0 - self.gamma
        n = self.states.size
        row_error = n * math.sqrt(math.log(2.0 * n * self.num_actions / self.delta_i) / (2.0 * visited.min()))
        return (1.0 - self.gamma) * min(1.0, row_error)

    def get(self, relax: bool = False) -> RealizationResult:
        """
        Empirical realization at max(0, εT - model_error_allowance()); the
        certificate is reported against the realizer's own εT.

        relax=True drops the occupancy constraints (εT = 1).
        """
        if not self.enough():
            raise NotEnoughDataError(f"realizer of {self.tuple} has not collected enough samples")
        eps_t = 1.0 if relax else max(0.0, self.eps_t - self.model_error_allowance())
        problem = RealizationProblem(
            block=self.empirical_block(),
            nu=self.entry_distribution(),
            h_targets=self.h_targets,
            v_target=self.v_target,
            eps_r=self.eps_r,
            eps_t=eps_t,
            eta=self.eta,
            lam=self.lam,
            previous=self.previous,
            action=self.action,
        )
        result = realize_exact(problem, empirical=True)
        result.certificate = certify(problem.model_copy(update={"eps_t": self.eps_t}), result.option)
        logger.info("[ONLINE] tuple %s realized from %d entries at eps_t=%.4g, V̂=%.4g",
                    self.tuple, len(self.entry_log), eps_t, result.value)
        return result

    def entry_drift(self) -> float:
        """Total variation between the entry frequencies of the first and second half of the log."""
        half = len(self.entry_log) // 2
        if half == 0:
            return 0.0
        first = np.bincount(self.entry_log[:half], minlength=self.mapping.num_states) / half
        second = np.bincount(self.entry_log[half:], minlength=self.mapping.num_states) / (len(self.entry_log) - half)
        return float(0.5 * np.abs(first - second).sum())


def online_realizer_for(pair: AbstractionPair, tuple_: AbstractTuple, **kwargs) -> OnlineRealizer:
    """OnlineRealizer of a tuple with targets taken from the abstraction."""
    previous, abstract_state, action = tuple_
    h_targets, v_target = tilde_targets(pair.abstract, previous, abstract_state, action, pair.ground.gamma)
    return OnlineRealizer(
        mapping=pair.mapping,
        tuple_=tuple_,
        h_targets=h_targets,
        v_target=v_target,
        gamma=pair.ground.gamma,
        num_actions=pair.ground.num_actions,
        **kwargs,
    )
