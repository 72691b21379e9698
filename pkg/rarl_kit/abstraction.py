"""
State abstractions: mappings, blocks, options and the checks built on them.

This module handles:
- Mappings F: S → S̄ and the entry/exit sets they induce.
- Block MDPs (a block, its exits and an absorbing sink).
- F-relative options and policies of options, with exact evaluation.
- The h̃ / Ṽ targets of an abstract 2-MDP.
- Verification: realizability (per entry and from a distribution),
  admissibility, homomorphisms, stochastic bisimulation, horizon feasibility
  and the value-loss bound.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Literal, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import CHECK_TOL, ENUMERATION_CAP, ROW_SUM_TOL
from .errors import (
    DegenerateSelfLoopError,
    EnumerationCapError,
    InitiationError,
    InvalidModelError,
    MappingError,
)
from .mdp import (
    DeterministicPolicy,
    GroundMdp,
    SecondOrderMdp,
    StochasticPolicy,
    enumerate_deterministic_policies,
    evaluate_policy_2mdp,
    solve_linear,
)

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]
AbstractTuple = Tuple[int, int, int]

# ---------------------------------------------------------------------------
# MAPPINGS AND ENTRY/EXIT SETS
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mapping:
    """Surjective F: S → S̄; the ground dummy start maps to the abstract dummy."""

    assignment: np.ndarray
    num_abstract_states: int

    def __post_init__(self) -> None:
        assignment = np.array(self.assignment, dtype=np.int64, copy=True)
        if assignment.ndim != 1 or assignment.size == 0:
            raise MappingError("mapping must be a non-empty 1-D table")
        if self.num_abstract_states < 1:
            raise MappingError("mapping needs at least one abstract state")
        if np.any(assignment < 0) or np.any(assignment >= self.num_abstract_states):
            raise MappingError(f"mapping refers to abstract states outside [0, {self.num_abstract_states})")
        missing = sorted(set(range(self.num_abstract_states)) - set(assignment.tolist()))
        if missing:
            raise MappingError(f"mapping is not surjective; empty blocks {missing}")
        assignment.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "num_abstract_states", int(self.num_abstract_states))

    @classmethod
    def identity(cls, num_states: int) -> "Mapping":
        return cls(np.arange(num_states), num_states)

    @property
    def num_states(self) -> int:
        return self.assignment.size

    def __call__(self, s: int) -> int:
        if s == self.num_states:
            return self.num_abstract_states
        return int(self.assignment[s])

    def block(self, abstract_state: int) -> np.ndarray:
        """Ground states of [s̄], ascending."""
        if not 0 <= abstract_state < self.num_abstract_states:
            raise MappingError(f"unknown abstract state {abstract_state}")
        return np.flatnonzero(self.assignment == abstract_state)

    def marginal(self, distribution: np.ndarray) -> np.ndarray:
        """Push a ground distribution through F."""
        return np.bincount(self.assignment, weights=distribution, minlength=self.num_abstract_states)


@dataclass(frozen=True)
class EntryExitSets:
    """
    entries[(s̄p, s̄)] for s̄p ≠ s̄ (s̄p may be the dummy S̄) and exits[s̄].
    """

    entries: Dict[Pair, FrozenSet[int]]
    exits: Dict[int, FrozenSet[int]]

    def entries_of(self, previous: int, abstract_state: int) -> np.ndarray:
        return np.array(sorted(self.entries.get((previous, abstract_state), ())), dtype=np.int64)

    def applicable_pairs(self) -> List[Pair]:
        """Ordered pairs with a non-empty entry set (dummy predecessor last)."""
        return sorted((k for k, v in self.entries.items() if v), key=lambda k: (k[0], k[1]))


def compute_entries_exits(mdp: GroundMdp, mapping: Mapping) -> EntryExitSets:
    """
    E(s̄p, s̄) = {s ∈ [s̄] | T(s | sp, a) > 0 for some sp ∈ [s̄p], a}.

    E(s̄*, s̄) is the support of ν₀ inside [s̄]; X_s̄ is the union of E(s̄, s̄').
    """
    if mapping.num_states != mdp.num_states:
        raise MappingError(f"mapping covers {mapping.num_states} states, MDP has {mdp.num_states}")
    n_abs = mapping.num_abstract_states
    reachable = np.any(mdp.transition > 0.0, axis=1)  # (s, s')
    entries: Dict[Pair, FrozenSet[int]] = {}
    for prev in range(n_abs):
        from_prev = np.any(reachable[mapping.assignment == prev], axis=0)
        for cur in range(n_abs):
            if cur == prev:
                continue
            hit = np.flatnonzero(from_prev & (mapping.assignment == cur))
            entries[(prev, cur)] = frozenset(hit.tolist())
    support = mdp.start_distribution > 0.0
    for cur in range(n_abs):
        hit = np.flatnonzero(support & (mapping.assignment == cur))
        entries[(n_abs, cur)] = frozenset(hit.tolist())

    exits = {
        cur: frozenset().union(*(entries[(cur, nxt)] for nxt in range(n_abs) if nxt != cur))
        for cur in range(n_abs)
    }
    return EntryExitSets(entries=entries, exits=exits)


# ---------------------------------------------------------------------------
# BLOCK MDPs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockMdp:
    """
    Restriction of a ground MDP to one block.

    Local states are ordered: block states, then exits, then the sink s⊥.
    Exits move to the sink under every action; the sink is absorbing; rewards
    are zero outside the block.
    """

    abstract_state: int
    states: np.ndarray
    exits: np.ndarray
    exit_blocks: np.ndarray
    mdp: GroundMdp
    num_abstract_states: int

    @property
    def num_block_states(self) -> int:
        return self.states.size

    @property
    def num_local_states(self) -> int:
        return self.mdp.num_states

    @property
    def num_actions(self) -> int:
        return self.mdp.num_actions

    @property
    def gamma(self) -> float:
        return self.mdp.gamma

    @property
    def sink(self) -> int:
        return self.mdp.num_states - 1

    @cached_property
    def ground_index(self) -> np.ndarray:
        """Local → ground index; the sink maps to -1."""
        return np.concatenate([self.states, self.exits, [-1]]).astype(np.int64)

    @cached_property
    def local_blocks(self) -> np.ndarray:
        """Abstract block of every local state; the sink gets index S̄."""
        own = np.full(self.states.size, self.abstract_state, dtype=np.int64)
        return np.concatenate([own, self.exit_blocks, [self.num_abstract_states]]).astype(np.int64)

    def local_index(self, ground_state: int) -> int:
        hits = np.flatnonzero(self.ground_index == ground_state)
        if hits.size == 0:
            raise InvalidModelError(f"ground state {ground_state} is not part of block {self.abstract_state}")
        return int(hits[0])

    def in_block(self, ground_state: int) -> bool:
        return bool(np.any(self.states == ground_state))


def build_block_mdp(mdp: GroundMdp, mapping: Mapping, abstract_state: int,
                    sets: Optional[EntryExitSets] = None) -> BlockMdp:
    """The block MDP of s̄, with the local→ground index table retained."""
    sets = sets or compute_entries_exits(mdp, mapping)
    states = mapping.block(abstract_state)
    exits = np.array(sorted(sets.exits[abstract_state]), dtype=np.int64)
    n, m, num_actions = states.size, exits.size, mdp.num_actions
    size = n + m + 1

    transition = np.zeros((size, num_actions, size))
    inner = mdp.transition[states]  # (n, A, S)
    transition[:n, :, :n] = inner[:, :, states]
    transition[:n, :, n:n + m] = inner[:, :, exits]
    transition[n:, :, size - 1] = 1.0
    # mass to states that are neither in the block nor exits cannot exist
    leak = 1.0 - transition[:n].sum(axis=2)
    if np.any(np.abs(leak) > ROW_SUM_TOL * max(1, mdp.num_states)):
        raise InvalidModelError(f"block {abstract_state} leaks probability outside its exits")
    transition[:n] /= transition[:n].sum(axis=2, keepdims=True)

    reward = np.zeros((size, num_actions))
    reward[:n] = mdp.reward[states]
    start = np.zeros(size)
    start[:n] = 1.0 / n

    block = BlockMdp(
        abstract_state=abstract_state,
        states=states,
        exits=exits,
        exit_blocks=mapping.assignment[exits] if m else np.zeros(0, dtype=np.int64),
        mdp=GroundMdp(transition, reward, mdp.gamma, start),
        num_abstract_states=mapping.num_abstract_states,
    )
    logger.debug("[ABS] block %d: %d states, %d exits", abstract_state, n, m)
    return block


# ---------------------------------------------------------------------------
# OPTIONS
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FRelativeOption:
    """
    Option initiated on [s̄p] x [s̄] that runs until it leaves [s̄].

    policy has one row per state of the block, in the order of `states`.
    """

    previous: int
    abstract_state: int
    states: np.ndarray
    policy: np.ndarray

    def __post_init__(self) -> None:
        states = np.array(self.states, dtype=np.int64, copy=True)
        policy = np.array(self.policy, dtype=float, copy=True)
        if policy.ndim != 2 or policy.shape[0] != states.size:
            raise InvalidModelError("option policy must have one row per block state")
        if np.any(policy < 0.0) or np.any(np.abs(policy.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise InvalidModelError("option policy rows must be distributions")
        states.setflags(write=False)
        policy.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "policy", policy)

    @classmethod
    def deterministic(cls, previous: int, abstract_state: int, states: np.ndarray,
                      actions: Sequence[int], num_actions: int) -> "FRelativeOption":
        policy = np.zeros((len(states), num_actions))
        policy[np.arange(len(states)), np.asarray(actions, dtype=np.int64)] = 1.0
        return cls(previous, abstract_state, states, policy)

    @classmethod
    def repeat(cls, previous: int, abstract_state: int, states: np.ndarray,
               action: int, num_actions: int) -> "FRelativeOption":
        return cls.deterministic(previous, abstract_state, states, [action] * len(states), num_actions)

    @property
    def pair(self) -> Pair:
        return (self.previous, self.abstract_state)

    @property
    def num_actions(self) -> int:
        return self.policy.shape[1]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.policy.max(axis=1), 1.0, atol=ROW_SUM_TOL)))

    @cached_property
    def _rows(self) -> Dict[int, int]:
        return {int(s): i for i, s in enumerate(self.states)}

    def covers(self, ground_state: int) -> bool:
        return ground_state in self._rows

    def action_probabilities(self, ground_state: int) -> np.ndarray:
        try:
            return self.policy[self._rows[ground_state]]
        except KeyError:
            raise InitiationError(
                f"state {ground_state} is outside the block of option {self.pair}"
            ) from None

    def act(self, ground_state: int, rng: np.random.Generator) -> int:
        probs = self.action_probabilities(ground_state)
        if self.is_deterministic:
            return int(np.argmax(probs))
        return int(rng.choice(probs.size, p=probs))

    def with_pair(self, previous: int) -> "FRelativeOption":
        return FRelativeOption(previous, self.abstract_state, self.states, self.policy)


def option_from_policy(block: BlockMdp, previous: int,
                       policy: Union[DeterministicPolicy, StochasticPolicy, np.ndarray],
                       local: bool = False) -> FRelativeOption:
    """
    Restrict a policy to the block states of an option.

    With local=True the policy is indexed by block-MDP states, otherwise by
    ground states.
    """
    if isinstance(policy, DeterministicPolicy):
        actions = policy.actions
        rows = actions[: block.num_block_states] if local else actions[block.states]
        return FRelativeOption.deterministic(previous, block.abstract_state, block.states, rows, block.num_actions)
    matrix = policy.probabilities if isinstance(policy, StochasticPolicy) else np.asarray(policy, dtype=float)
    rows = matrix[: block.num_block_states] if local else matrix[block.states]
    return FRelativeOption(previous, block.abstract_state, block.states, rows)


@dataclass
class PolicyOfOptions:
    """Ω: one option per applicable (s̄p, s̄) pair; placeholder pairs are flagged."""

    options: Dict[Pair, FRelativeOption] = field(default_factory=dict)
    placeholders: set = field(default_factory=set)

    def option_for(self, previous: int, abstract_state: int) -> FRelativeOption:
        try:
            return self.options[(previous, abstract_state)]
        except KeyError:
            raise InvalidModelError(f"no option for pair {(previous, abstract_state)}") from None

    def set(self, option: FRelativeOption, placeholder: bool = False) -> None:
        self.options[option.pair] = option
        if placeholder:
            self.placeholders.add(option.pair)
        else:
            self.placeholders.discard(option.pair)

    def __contains__(self, pair: Pair) -> bool:
        return pair in self.options

    def __len__(self) -> int:
        return len(self.options)


# ---------------------------------------------------------------------------
# ABSTRACTION PAIRS
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbstractionPair:
    """⟨M̄, F⟩ together with the ground MDP it abstracts."""

    ground: GroundMdp
    abstract: SecondOrderMdp
    mapping: Mapping
    _blocks: Dict[int, BlockMdp] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.mapping.num_states != self.ground.num_states:
            raise MappingError("mapping and ground MDP disagree on the number of states")
        if self.mapping.num_abstract_states != self.abstract.num_abstract_states:
            raise MappingError("mapping and abstract model disagree on the number of abstract states")
        if self.abstract.gamma_bar > self.ground.gamma + ROW_SUM_TOL:
            raise InvalidModelError(
                f"gamma_bar {self.abstract.gamma_bar} exceeds the ground gamma {self.ground.gamma}"
            )

    @cached_property
    def sets(self) -> EntryExitSets:
        return compute_entries_exits(self.ground, self.mapping)

    def block(self, abstract_state: int) -> BlockMdp:
        if abstract_state not in self._blocks:
            self._blocks[abstract_state] = build_block_mdp(self.ground, self.mapping, abstract_state, self.sets)
        return self._blocks[abstract_state]

    def entries(self, previous: int, abstract_state: int) -> np.ndarray:
        return self.sets.entries_of(previous, abstract_state)

    def applicable_pairs(self) -> List[Pair]:
        return self.sets.applicable_pairs()

    def applicable_tuples(self) -> List[AbstractTuple]:
        return [(p, s, a) for p, s in self.applicable_pairs() for a in range(self.abstract.num_abstract_actions)]

    def start_marginal_matches(self, tol: float = ROW_SUM_TOL) -> bool:
        marginal = self.mapping.marginal(self.ground.start_distribution)
        return bool(np.all(np.abs(marginal - self.abstract.abstract_start) <= tol))

    def with_abstract(self, abstract: SecondOrderMdp) -> "AbstractionPair":
        return AbstractionPair(self.ground, abstract, self.mapping)


# ---------------------------------------------------------------------------
# BLOCK OCCUPANCY AND VALUES
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockSolution:
    """Occupancies and values of one option in its block MDP, for every local source."""

    occupancy: np.ndarray  # (L, L): row = source, normalized
    values: np.ndarray     # (L,)
    occupancy_by_block: np.ndarray  # (L, S̄+1)


def _local_policy(block: BlockMdp, option: FRelativeOption) -> np.ndarray:
    if option.abstract_state != block.abstract_state or not np.array_equal(option.states, block.states):
        raise InitiationError(f"option {option.pair} does not live on block {block.abstract_state}")
    pi = np.zeros((block.num_local_states, block.num_actions))
    pi[: block.num_block_states] = option.policy
    pi[block.num_block_states:, 0] = 1.0
    return pi


def solve_block(block: BlockMdp, option: FRelativeOption) -> BlockSolution:
    """(1-γ)(I - γ P_o)^-1 gives every source's occupancy row at once."""
    pi = _local_policy(block, option)
    gamma = block.gamma
    p_pi = np.einsum("sa,sax->sx", pi, block.mdp.transition)
    r_pi = np.einsum("sa,sa->s", pi, block.mdp.reward)
    size = block.num_local_states
    resolvent = solve_linear(np.eye(size) - gamma * p_pi, np.eye(size))
    occupancy = np.clip((1.0 - gamma) * resolvent, 0.0, None)
    one_hot = np.zeros((size, block.num_abstract_states + 1))
    one_hot[np.arange(size), block.local_blocks] = 1.0
    return BlockSolution(occupancy=occupancy, values=resolvent @ r_pi, occupancy_by_block=occupancy @ one_hot)


def _check_in_block(block: BlockMdp, s: int) -> int:
    if not block.in_block(s):
        raise InitiationError(f"state {s} is outside block {block.abstract_state}")
    return block.local_index(s)


def block_occupancy(block: BlockMdp, option: FRelativeOption, s: int) -> np.ndarray:
    """h^o(·|s) over S̄ ∪ {s⊥}; the last entry is the sink mass d(s⊥|s)."""
    local = _check_in_block(block, s)
    return solve_block(block, option).occupancy_by_block[local]


def block_value(block: BlockMdp, option: FRelativeOption, s: int) -> float:
    local = _check_in_block(block, s)
    return float(solve_block(block, option).values[local])


def discounted_exit_probability(h: Union[float, np.ndarray], gamma: float):
    """Un-normalized block occupancy E[γ^τ 1{exit into s̄'}] = h / (1-γ)."""
    return np.asarray(h) / (1.0 - gamma) if np.ndim(h) else float(h) / (1.0 - gamma)


def exit_mass(block: BlockMdp, option: FRelativeOption, s: int) -> Tuple[float, float]:
    """(d(s⊥|s), Σ_exits d(·|s))."""
    local = _check_in_block(block, s)
    d = solve_block(block, option).occupancy[local]
    n = block.num_block_states
    return float(d[block.sink]), float(d[n:block.sink].sum())


def option_value_multistep(block: BlockMdp, option: FRelativeOption, s: int,
                           exit_values: np.ndarray) -> float:
    """
    Value of running the option from s and collecting exit_values (indexed by
    ground state) on the first exit.
    """
    local = _check_in_block(block, s)
    pi = _local_policy(block, option)
    d = solve_block(block, option).occupancy[local]
    n = block.num_block_states
    r_pi = np.einsum("sa,sa->s", pi[:n], block.mdp.reward[:n])
    exit_part = d[n:block.sink] @ np.asarray(exit_values, dtype=float)[block.exits] if block.exits.size else 0.0
    return float((d[:n] @ r_pi + exit_part) / (1.0 - block.gamma))


# ---------------------------------------------------------------------------
# ABSTRACT TARGETS
# ---------------------------------------------------------------------------


def tilde_targets(model: SecondOrderMdp, previous: int, abstract_state: int, action: int,
                  gamma: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """
    (h̃, Ṽ) of the tuple (s̄p, s̄, ā).

    h̃ has one entry per abstract state with h̃[s̄] = 0 and carries the (1-γ)
    normalizer of the ground occupancy; gamma defaults to γ̄.
    """
    if previous == abstract_state:
        raise InvalidModelError("tilde targets need s̄p ≠ s̄ (or the dummy predecessor)")
    g = model.gamma_bar
    gamma = g if gamma is None else gamma
    s = abstract_state
    loop = model.transition[s, s, action, s]
    if g * loop >= 1.0:
        raise DegenerateSelfLoopError(f"γ̄·T̄({s}|{s}{s},{action}) = 1")
    row = model.transition[previous, s, action]
    stay = row[s] / (1.0 - g * loop)
    h = (1.0 - gamma) * (g * row + g * g * stay * model.transition[s, s, action])
    h[s] = 0.0
    value = model.reward[previous, s, action] + g * stay * model.reward[s, s, action]
    return h, float(value)


# ---------------------------------------------------------------------------
# REPORTS
# ---------------------------------------------------------------------------


class EntryGap(BaseModel):
    entry: int
    value_gap: float
    occupancy_gap: float
    worst_block: Optional[int] = None


class RealizabilityReport(BaseModel):
    """Gaps of one tuple; value gaps are (1-γ)(Ṽ - V^o), occupancy gaps max h̃ - h^o."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    previous: int
    abstract_state: int
    action: int
    value_gap: float = 0.0
    occupancy_gap: float = 0.0
    verdict: bool = True
    vacuous: bool = False
    decided: bool = True
    worst_entry: Optional[int] = None
    entries: List[EntryGap] = Field(default_factory=list)
    witness: Optional[FRelativeOption] = Field(default=None, exclude=True)

    @property
    def tuple(self) -> AbstractTuple:
        return (self.previous, self.abstract_state, self.action)

    def row(self) -> dict:
        return self.model_dump(exclude={"entries", "witness"})


class CheckResult(BaseModel):
    """Outcome of a yes/no structural check with an optional witness."""

    holds: bool
    reason: str = ""
    witness: Optional[Tuple[int, int]] = None

    def __bool__(self) -> bool:
        return self.holds


def _occupancy_gaps(h_target: np.ndarray, h_rows: np.ndarray, abstract_state: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-row max_{s̄'≠s̄} h̃(s̄') - h(s̄'|s) and the arg-max block."""
    n_abs = h_target.size
    others = [b for b in range(n_abs) if b != abstract_state]
    if not others:
        return np.zeros(h_rows.shape[0]), np.full(h_rows.shape[0], -1)
    diff = h_target[others][None, :] - h_rows[:, others]
    worst = np.argmax(diff, axis=1)
    return diff[np.arange(diff.shape[0]), worst], np.asarray(others)[worst]


def check_realizable_tuple(pair: AbstractionPair, tuple_: AbstractTuple, option: FRelativeOption,
                           eps_r: float, eps_t: float) -> RealizabilityReport:
    """Per-entry gaps of an option against the targets of one tuple."""
    previous, abstract_state, action = tuple_
    if option.pair != (previous, abstract_state):
        raise InitiationError(f"option for {option.pair} cannot realize tuple {tuple_}")
    entries = pair.entries(previous, abstract_state)
    report = RealizabilityReport(previous=previous, abstract_state=abstract_state, action=action, witness=option)
    if entries.size == 0:
        report.vacuous = True
        return report

    gamma = pair.ground.gamma
    h_target, v_target = tilde_targets(pair.abstract, previous, abstract_state, action, gamma)
    block = pair.block(abstract_state)
    solution = solve_block(block, option)
    rows = np.array([block.local_index(int(s)) for s in entries])
    value_gaps = (1.0 - gamma) * (v_target - solution.values[rows])
    occ_gaps, worst_blocks = _occupancy_gaps(h_target, solution.occupancy_by_block[rows], abstract_state)

    report.entries = [
        EntryGap(entry=int(s), value_gap=float(v), occupancy_gap=float(o), worst_block=int(w) if w >= 0 else None)
        for s, v, o, w in zip(entries, value_gaps, occ_gaps, worst_blocks)
    ]
    report.value_gap = float(value_gaps.max())
    report.occupancy_gap = float(occ_gaps.max())
    report.verdict = bool(report.value_gap <= eps_r + CHECK_TOL and report.occupancy_gap <= eps_t + CHECK_TOL)
    score = np.maximum(value_gaps - eps_r, occ_gaps - eps_t)
    report.worst_entry = int(entries[int(np.argmax(score))])
    return report


def check_realizable_from(pair: AbstractionPair, tuple_: AbstractTuple, nu: np.ndarray,
                          option: FRelativeOption, eps_r: float, eps_t: float) -> RealizabilityReport:
    """Gaps against the ν-averaged occupancy and value; ν is indexed by ground state."""
    previous, abstract_state, action = tuple_
    if option.pair != (previous, abstract_state):
        raise InitiationError(f"option for {option.pair} cannot realize tuple {tuple_}")
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (pair.ground.num_states,):
        raise InvalidModelError("ν must be a distribution over ground states")
    entries = pair.entries(previous, abstract_state)
    support = np.flatnonzero(nu > 0.0)
    if not set(support.tolist()) <= set(entries.tolist()):
        raise InvalidModelError(f"ν puts mass outside the entries of {(previous, abstract_state)}")
    if abs(nu.sum() - 1.0) > 1e-9:
        raise InvalidModelError("ν must sum to 1")

    gamma = pair.ground.gamma
    h_target, v_target = tilde_targets(pair.abstract, previous, abstract_state, action, gamma)
    block = pair.block(abstract_state)
    solution = solve_block(block, option)
    rows = np.array([block.local_index(int(s)) for s in support])
    weights = nu[support]
    h_nu = weights @ solution.occupancy_by_block[rows]
    v_nu = float(weights @ solution.values[rows])
    occ_gap, worst_block = _occupancy_gaps(h_target, h_nu[None, :], abstract_state)
    value_gap = (1.0 - gamma) * (v_target - v_nu)
    return RealizabilityReport(
        previous=previous,
        abstract_state=abstract_state,
        action=action,
        value_gap=float(value_gap),
        occupancy_gap=float(occ_gap[0]),
        verdict=bool(value_gap <= eps_r + CHECK_TOL and occ_gap[0] <= eps_t + CHECK_TOL),
        witness=option,
    )


# ---------------------------------------------------------------------------
# OPTION ENUMERATION, ADMISSIBILITY AND REALIZABILITY MEASUREMENT
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptionProfile:
    """h^o and V^o of one option at every entry of a pair (rows follow the entries)."""

    option: FRelativeOption
    occupancy: np.ndarray  # (entries, S̄+1)
    values: np.ndarray     # (entries,)


def enumerate_options(pair: AbstractionPair, previous: int, abstract_state: int,
                      cap: Optional[int] = None) -> Iterator[FRelativeOption]:
    """Every deterministic option of the block, in lexicographic action order."""
    block = pair.block(abstract_state)
    cap = ENUMERATION_CAP if cap is None else cap
    for actions in enumerate_deterministic_policies(block.num_block_states, block.num_actions, cap):
        yield FRelativeOption.deterministic(previous, abstract_state, block.states, actions, block.num_actions)


def option_profiles(pair: AbstractionPair, previous: int, abstract_state: int,
                    cap: Optional[int] = None) -> List[OptionProfile]:
    block = pair.block(abstract_state)
    entries = pair.entries(previous, abstract_state)
    rows = np.array([block.local_index(int(s)) for s in entries], dtype=np.int64)
    profiles = []
    for option in enumerate_options(pair, previous, abstract_state, cap):
        solution = solve_block(block, option)
        profiles.append(OptionProfile(option, solution.occupancy_by_block[rows], solution.values[rows]))
    return profiles


class OptionResponse(BaseModel):
    """Dominating abstract action for one enumerated option (None when there is none)."""

    actions: List[int]
    dominating_action: Optional[int] = None
    violation: Literal["", "value", "occupancy", "mixed"] = ""
    worst_entry: Optional[int] = None


def _domination_slack(pair: AbstractionPair, previous: int, abstract_state: int, action: int,
                      profile: OptionProfile) -> Tuple[np.ndarray, np.ndarray]:
    """Per entry: max(h^o - h̃) over s̄'≠s̄ and V^o - Ṽ (≤ 0 means dominated)."""
    h_target, v_target = tilde_targets(pair.abstract, previous, abstract_state, action, pair.ground.gamma)
    occ_excess, _ = _occupancy_gaps(-h_target, -profile.occupancy, abstract_state)
    return occ_excess, profile.values - v_target


def best_response_targets(pair: AbstractionPair, previous: int, abstract_state: int,
                          cap: Optional[int] = None) -> List[OptionResponse]:
    """
    For each deterministic option on the pair, the first abstract action whose
    targets dominate the option at every entry on both h̃ and Ṽ.
    """
    entries = pair.entries(previous, abstract_state)
    responses = []
    for profile in option_profiles(pair, previous, abstract_state, cap):
        actions = [int(np.argmax(row)) for row in profile.option.policy]
        response = OptionResponse(actions=actions)
        fails_value, fails_occ = True, True
        best_score, best_entry = np.inf, None
        for action in range(pair.abstract.num_abstract_actions):
            occ_excess, value_excess = _domination_slack(pair, previous, abstract_state, action, profile)
            value_ok = bool(np.all(value_excess <= CHECK_TOL))
            occ_ok = bool(np.all(occ_excess <= CHECK_TOL))
            if value_ok and occ_ok:
                response.dominating_action = action
                break
            fails_value &= not value_ok
            fails_occ &= not occ_ok
            score = np.maximum(occ_excess, value_excess)
            if score.max() < best_score:
                best_score, best_entry = float(score.max()), int(entries[int(np.argmax(score))])
        if response.dominating_action is None:
            response.violation = "value" if fails_value else ("occupancy" if fails_occ else "mixed")
            response.worst_entry = best_entry
        responses.append(response)
    return responses


class PairAdmissibility(BaseModel):
    previous: int
    abstract_state: int
    status: Literal["admissible", "inadmissible", "undecided"]
    violations: List[OptionResponse] = Field(default_factory=list)


class AdmissibilityReport(BaseModel):
    pairs: List[PairAdmissibility] = Field(default_factory=list)

    @property
    def status(self) -> str:
        statuses = {p.status for p in self.pairs}
        if "inadmissible" in statuses:
            return "inadmissible"
        if "undecided" in statuses:
            return "undecided"
        return "admissible"

    @property
    def admissible(self) -> bool:
        return self.status == "admissible"


def check_admissible(pair: AbstractionPair, cap: Optional[int] = None) -> AdmissibilityReport:
    """Exhaustive admissibility check; pairs beyond the enumeration cap are undecided."""
    report = AdmissibilityReport()
    for previous, abstract_state in pair.applicable_pairs():
        try:
            responses = best_response_targets(pair, previous, abstract_state, cap)
        except EnumerationCapError as exc:
            logger.warning("[ABS] pair %s undecided at this scale: %s", (previous, abstract_state), exc)
            report.pairs.append(PairAdmissibility(previous=previous, abstract_state=abstract_state, status="undecided"))
            continue
        violations = [r for r in responses if r.dominating_action is None]
        report.pairs.append(PairAdmissibility(
            previous=previous,
            abstract_state=abstract_state,
            status="inadmissible" if violations else "admissible",
            violations=violations,
        ))
    logger.info("[ABS] admissibility: %s over %d pairs", report.status, len(report.pairs))
    return report


def _bound_contribution(value_gap: float, occupancy_gap: float, gamma_bar: float, num_abstract: int) -> float:
    return max(value_gap, 0.0) * (1.0 - gamma_bar) + max(occupancy_gap, 0.0) * num_abstract


def find_realizing_option(pair: AbstractionPair, tuple_: AbstractTuple, eps_r: float, eps_t: float,
                          cap: Optional[int] = None) -> RealizabilityReport:
    """
    Search the deterministic options of a tuple for a realizing witness.

    Among passing options the one with the smallest contribution to the value
    loss bound wins; if none passes, the overall best is returned with a false
    verdict.
    """
    previous, abstract_state, action = tuple_
    best: Optional[RealizabilityReport] = None
    best_key = (True, np.inf)
    for option in enumerate_options(pair, previous, abstract_state, cap):
        report = check_realizable_tuple(pair, tuple_, option, eps_r, eps_t)
        key = (not report.verdict, _bound_contribution(
            report.value_gap, report.occupancy_gap, pair.abstract.gamma_bar, pair.abstract.num_abstract_states))
        if best is None or key < best_key:
            best, best_key = report, key
    return best


class MeasuredRealizability(BaseModel):
    """Smallest (εR, εT) the enumerated witnesses achieve, with the witness per tuple."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    eps_r: float
    eps_t: float
    witnesses: Dict[AbstractTuple, FRelativeOption] = Field(default_factory=dict, exclude=True)
    reports: List[RealizabilityReport] = Field(default_factory=list)


def measure_realizability(pair: AbstractionPair, cap: Optional[int] = None) -> MeasuredRealizability:
    eps_r, eps_t = 0.0, 0.0
    witnesses: Dict[AbstractTuple, FRelativeOption] = {}
    reports = []
    for tuple_ in pair.applicable_tuples():
        report = find_realizing_option(pair, tuple_, np.inf, np.inf, cap)
        witnesses[tuple_] = report.witness
        reports.append(report)
        eps_r = max(eps_r, report.value_gap)
        eps_t = max(eps_t, report.occupancy_gap)
    logger.info("[ABS] measured realizability: eps_r=%.4g eps_t=%.4g over %d tuples", eps_r, eps_t, len(reports))
    return MeasuredRealizability(eps_r=eps_r, eps_t=eps_t, witnesses=witnesses, reports=reports)


# ---------------------------------------------------------------------------
# POLICIES OF OPTIONS
# ---------------------------------------------------------------------------


def realize_abstract_policy(pair: AbstractionPair, abstract_policy: DeterministicPolicy,
                            witnesses: Dict[AbstractTuple, FRelativeOption]) -> PolicyOfOptions:
    """Ω(s̄p, s̄) = the witness of (s̄p, s̄, π̄(s̄p s̄))."""
    omega = PolicyOfOptions()
    for previous, abstract_state in pair.applicable_pairs():
        action = abstract_policy(previous, abstract_state)
        try:
            omega.set(witnesses[(previous, abstract_state, action)])
        except KeyError:
            raise InvalidModelError(f"no witness for tuple {(previous, abstract_state, action)}") from None
    return omega


def evaluate_policy_of_options(mdp: GroundMdp, mapping: Mapping, omega: PolicyOfOptions) -> np.ndarray:
    """
    V^Ω over (previous block, ground state), shape (S̄+1, S).

    Row S̄ is the dummy predecessor. Pairs without an option act uniformly;
    they are unreachable when Ω covers every applicable pair.
    """
    n_abs, n, num_actions = mapping.num_abstract_states, mdp.num_states, mdp.num_actions
    size = (n_abs + 1) * n
    policy = np.full((n_abs + 1, n, num_actions), 1.0 / num_actions)
    for (previous, abstract_state), option in omega.options.items():
        policy[previous, option.states] = option.policy

    stay = mapping.assignment[None, :] == mapping.assignment[:, None]  # (s, s') same block
    matrix = np.zeros((size, size))
    rewards = np.zeros(size)
    for k in range(n_abs + 1):
        p_k = np.einsum("sa,sax->sx", policy[k], mdp.transition)
        rewards[k * n:(k + 1) * n] = np.einsum("sa,sa->s", policy[k], mdp.reward)
        rows = np.arange(k * n, (k + 1) * n)
        # staying in the block keeps the predecessor, leaving sets it to F(s)
        matrix[np.ix_(rows, np.arange(k * n, (k + 1) * n))] += np.where(stay, p_k, 0.0)
        for b in range(n_abs):
            from_b = mapping.assignment == b
            cols = np.arange(b * n, (b + 1) * n)
            matrix[np.ix_(rows[from_b], cols)] += np.where(stay[from_b], 0.0, p_k[from_b])
    values = solve_linear(np.eye(size) - mdp.gamma * matrix, rewards)
    return values.reshape(n_abs + 1, n)


def value_of_options_from_start(mdp: GroundMdp, mapping: Mapping, omega: PolicyOfOptions) -> float:
    values = evaluate_policy_of_options(mdp, mapping, omega)
    return float(mdp.start_distribution @ values[mapping.num_abstract_states])


def preimage_option(pair: AbstractionPair, previous: int, abstract_state: int, action: int,
                    action_maps: np.ndarray) -> FRelativeOption:
    """Option playing, at each block state s, the lowest ground action a with g_s(a) = ā."""
    block = pair.block(abstract_state)
    actions = []
    for s in block.states:
        hits = np.flatnonzero(np.asarray(action_maps)[s] == action)
        if hits.size == 0:
            raise InvalidModelError(f"abstract action {action} has no preimage at state {s}")
        actions.append(int(hits[0]))
    return FRelativeOption.deterministic(previous, abstract_state, block.states, actions, block.num_actions)


def dominating_abstract_policy(pair: AbstractionPair, ground_policy: DeterministicPolicy) -> DeterministicPolicy:
    """
    Per applicable pair, the first abstract action whose targets dominate the
    ground policy restricted to the block at every entry.
    """
    n_abs = pair.abstract.num_abstract_states
    table = np.zeros((n_abs + 1, n_abs), dtype=np.int64)
    for previous, abstract_state in pair.applicable_pairs():
        block = pair.block(abstract_state)
        option = option_from_policy(block, previous, ground_policy)
        entries = pair.entries(previous, abstract_state)
        solution = solve_block(block, option)
        rows = np.array([block.local_index(int(s)) for s in entries])
        profile = OptionProfile(option, solution.occupancy_by_block[rows], solution.values[rows])
        for action in range(pair.abstract.num_abstract_actions):
            occ_excess, value_excess = _domination_slack(pair, previous, abstract_state, action, profile)
            if np.all(occ_excess <= CHECK_TOL) and np.all(value_excess <= CHECK_TOL):
                table[previous, abstract_state] = action
                break
        else:
            raise InvalidModelError(
                f"no abstract action dominates the restricted policy on pair {(previous, abstract_state)}"
            )
    return DeterministicPolicy(table)


class BoundGap(BaseModel):
    previous: int
    abstract_state: int
    entry: int
    gap: float


def theorem_bound_gaps(pair: AbstractionPair, abstract_policy: DeterministicPolicy,
                       omega: PolicyOfOptions) -> List[BoundGap]:
    """V̄^π̄(s̄p s̄) - V^Ω(s̄p, s) at every entry s of every applicable pair."""
    abstract_values = evaluate_policy_2mdp(pair.abstract, abstract_policy)
    ground_values = evaluate_policy_of_options(pair.ground, pair.mapping, omega)
    gaps = []
    for previous, abstract_state in pair.applicable_pairs():
        for s in pair.entries(previous, abstract_state):
            gaps.append(BoundGap(
                previous=previous,
                abstract_state=abstract_state,
                entry=int(s),
                gap=float(abstract_values[previous, abstract_state] - ground_values[previous, s]),
            ))
    return gaps


def value_loss_bound(eps_r: float, eps_t: float, gamma: float, gamma_bar: float, num_abstract_states: int) -> float:
    """(εR(1-γ̄) + εT·S̄) / ((1-γ)²(1-γ̄))."""
    return (eps_r * (1.0 - gamma_bar) + eps_t * num_abstract_states) / ((1.0 - gamma) ** 2 * (1.0 - gamma_bar))


class HorizonReport(BaseModel):
    holds: bool
    slack: float
    stay_occupancy: float
    required: float

    def __bool__(self) -> bool:
        return self.holds


def horizon_feasibility(pair: AbstractionPair, tuple_: AbstractTuple, option: FRelativeOption,
                        entry: int) -> HorizonReport:
    """h^o(s̄|s) ≥ (1-γ̄)·max{1, V^o(s)}, with the slack of the inequality."""
    _, abstract_state, _ = tuple_
    block = pair.block(abstract_state)
    local = _check_in_block(block, entry)
    solution = solve_block(block, option)
    stay = float(solution.occupancy_by_block[local, abstract_state])
    required = (1.0 - pair.abstract.gamma_bar) * max(1.0, float(solution.values[local]))
    slack = stay - required
    return HorizonReport(holds=slack >= -CHECK_TOL, slack=slack, stay_occupancy=stay, required=required)


# ---------------------------------------------------------------------------
# HOMOMORPHISM AND BISIMULATION
# ---------------------------------------------------------------------------


def check_homomorphism(mdp: GroundMdp, abstract: Union[GroundMdp, SecondOrderMdp], mapping: Mapping,
                       action_maps: np.ndarray, tol: float = ROW_SUM_TOL) -> CheckResult:
    """
    (F, {g_s}) is a homomorphism onto a first-order abstract model when block
    sums of T and rewards are preserved under the action maps.

    Witnesses: (s, s') for two states of one block that no abstract model can
    serve together, otherwise (s, a) for a mismatch against the given model.
    """
    if isinstance(abstract, SecondOrderMdp):
        abstract = abstract.first_order_view()
    action_maps = np.asarray(action_maps, dtype=np.int64)
    if action_maps.shape != (mdp.num_states, mdp.num_actions):
        raise InvalidModelError(f"action maps must have shape {(mdp.num_states, mdp.num_actions)}")
    if mapping.num_states != mdp.num_states or mapping.num_abstract_states != abstract.num_states:
        raise InvalidModelError("mapping does not match the MDP dimensions")
    if np.any(action_maps < 0) or np.any(action_maps >= abstract.num_actions):
        raise InvalidModelError("action maps refer to unknown abstract actions")

    for s in range(mdp.num_states):
        if len(set(action_maps[s].tolist())) != abstract.num_actions:
            return CheckResult(holds=False, reason="surjectivity", witness=(s, -1))

    one_hot = np.zeros((mdp.num_states, mapping.num_abstract_states))
    one_hot[np.arange(mdp.num_states), mapping.assignment] = 1.0
    block_sums = mdp.transition @ one_hot  # (s, a, s̄')

    seen: Dict[Tuple[int, int], Tuple[int, np.ndarray, float]] = {}
    for s in range(mdp.num_states):
        for a in range(mdp.num_actions):
            key = (mapping(s), int(action_maps[s, a]))
            row, reward = block_sums[s, a], mdp.reward[s, a]
            if key in seen:
                other, other_row, other_reward = seen[key]
                if np.any(np.abs(row - other_row) > tol):
                    return CheckResult(holds=False, reason="transition-pair", witness=(other, s))
                if abs(reward - other_reward) > tol:
                    return CheckResult(holds=False, reason="reward-pair", witness=(other, s))
            else:
                seen[key] = (s, row, reward)

    for (block, abstract_action), (s, row, reward) in seen.items():
        if np.any(np.abs(abstract.transition[block, abstract_action] - row) > tol):
            return CheckResult(holds=False, reason="transition-model", witness=(s, abstract_action))
        if abs(abstract.reward[block, abstract_action] - reward) > tol:
            return CheckResult(holds=False, reason="reward-model", witness=(s, abstract_action))
    return CheckResult(holds=True)


def homomorphism_relation(mapping: Mapping) -> List[Tuple[int, int]]:
    """The graph of F as a relation between ground and abstract states."""
    return [(s, int(b)) for s, b in enumerate(mapping.assignment)]


def check_bisimulation(mdp_a: GroundMdp, mdp_b: GroundMdp, relation: Iterable[Tuple[int, int]],
                       tol: float = ROW_SUM_TOL) -> CheckResult:
    """
    Stochastic bisimulation check over the equivalence closure of the relation.

    The closure classes are the connected components of the relation graph on
    the disjoint union of both state sets.
    """
    if mdp_a.num_actions != mdp_b.num_actions:
        raise InvalidModelError("bisimulation needs a shared action set")
    relation = [(int(x), int(y)) for x, y in relation]
    graph = nx.Graph()
    graph.add_nodes_from(("a", s) for s in range(mdp_a.num_states))
    graph.add_nodes_from(("b", s) for s in range(mdp_b.num_states))
    graph.add_edges_from((("a", x), ("b", y)) for x, y in relation)

    related_a = {x for x, _ in relation}
    related_b = {y for _, y in relation}
    for s in range(mdp_a.num_states):
        if s not in related_a:
            return CheckResult(holds=False, reason="totality-left", witness=(s, -1))
    for s in range(mdp_b.num_states):
        if s not in related_b:
            return CheckResult(holds=False, reason="totality-right", witness=(-1, s))

    components = list(nx.connected_components(graph))
    class_a = np.zeros((mdp_a.num_states, len(components)))
    class_b = np.zeros((mdp_b.num_states, len(components)))
    for c, members in enumerate(components):
        for side, s in members:
            (class_a if side == "a" else class_b)[s, c] = 1.0
    sums_a = mdp_a.transition @ class_a
    sums_b = mdp_b.transition @ class_b

    for x, y in relation:
        if np.any(np.abs(mdp_a.reward[x] - mdp_b.reward[y]) > tol):
            return CheckResult(holds=False, reason="reward", witness=(x, y))
        if np.any(np.abs(sums_a[x] - sums_b[y]) > tol):
            return CheckResult(holds=False, reason="transition", witness=(x, y))
    return CheckResult(holds=True)
