"""
Tabular 1- and 2-order MDPs.

This module handles:
- The GroundMdp / SecondOrderMdp tables and their invariants.
- Deterministic and stochastic policies.
- Exact policy evaluation through dense LU solves.
- Value iteration for both orders.
- Discounted occupancy measures and the CMDP value helpers built on them.

Conventions: ground states are 0..S-1 and the dummy start s* is the virtual
index S, whose only role is to emit the start distribution. Abstract states are
0..S̄-1 and the abstract dummy s̄* is S̄; 2-MDP tables carry one extra
predecessor row for it, so their shape is (S̄+1, S̄, Ā[, S̄]).
"""

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Literal, Sequence, Union

import numpy as np
from scipy import linalg

from .config import OCCUPANCY_SUM_TOL, ROW_SUM_TOL, SOLVE_RESIDUAL_TOL
from .errors import EnumerationCapError, InvalidModelError, SingularSystemError

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# BASIC HELPERS
# ---------------------------------------------------------------------------


def _frozen(array: np.ndarray, dtype=float) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_distribution(values: np.ndarray, what: str, tol: float = ROW_SUM_TOL) -> None:
    if np.any(values < 0.0):
        raise InvalidModelError(f"{what} has negative entries")
    sums = values.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > tol):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise InvalidModelError(f"{what} rows do not sum to 1 (worst deviation {worst:.3e})")


def _check_gamma(gamma: float, what: str = "gamma") -> None:
    if not 0.0 < gamma < 1.0:
        raise InvalidModelError(f"{what} must lie in (0, 1), got {gamma}")


def solve_linear(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Dense LU solve with partial pivoting and a residual check.

    Raises SingularSystemError when the solution does not reproduce the
    right-hand side to SOLVE_RESIDUAL_TOL (relative to the problem scale).
    """
    try:
        lu, piv = linalg.lu_factor(matrix, check_finite=True)
        solution = linalg.lu_solve((lu, piv), rhs)
    except (ValueError, linalg.LinAlgError) as exc:
        raise SingularSystemError(f"linear solve failed: {exc}") from exc

    if not np.all(np.isfinite(solution)):
        raise SingularSystemError("linear solve produced non-finite values")
    residual = float(np.max(np.abs(matrix @ solution - rhs))) if rhs.size else 0.0
    scale = max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 0.0,
                float(np.max(np.abs(solution))) if solution.size else 0.0)
    if residual > SOLVE_RESIDUAL_TOL * scale:
        raise SingularSystemError(f"linear solve residual {residual:.3e} above tolerance")
    return solution


# ---------------------------------------------------------------------------
# MODEL TYPES
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundMdp:
    """
    Finite tabular MDP ⟨S, A, T, R, γ, ν₀⟩.

    transition has shape (S, A, S), reward (S, A), start_distribution (S,).
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    start_distribution: np.ndarray

    def __post_init__(self) -> None:
        transition = _frozen(self.transition)
        reward = _frozen(self.reward)
        start = _frozen(self.start_distribution)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise InvalidModelError(f"transition must have shape (S, A, S), got {transition.shape}")
        num_states, num_actions, _ = transition.shape
        if num_states == 0 or num_actions == 0:
            raise InvalidModelError("an MDP needs at least one state and one action")
        if reward.shape != (num_states, num_actions):
            raise InvalidModelError(f"reward must have shape {(num_states, num_actions)}, got {reward.shape}")
        if start.shape != (num_states,):
            raise InvalidModelError(f"start_distribution must have shape {(num_states,)}")
        _check_distribution(transition, "transition")
        _check_distribution(start, "start_distribution")
        if np.any(reward < 0.0) or np.any(reward > 1.0):
            raise InvalidModelError("rewards must lie in [0, 1]")
        _check_gamma(self.gamma)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "start_distribution", start)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def dummy_start(self) -> int:
        """Virtual index of s*, whose successor distribution is ν₀."""
        return self.num_states

    def with_reward(self, reward: np.ndarray) -> "GroundMdp":
        return replace(self, reward=reward)

    def with_start(self, start_distribution: np.ndarray) -> "GroundMdp":
        return replace(self, start_distribution=start_distribution)


@dataclass(frozen=True)
class SecondOrderMdp:
    """
    Abstract 2-MDP ⟨S̄, Ā, T̄, R̄, γ̄⟩.

    transition[p, s, a, s'] = T̄(s' | p s, a) and reward[p, s, a] = R̄(p s, a),
    where p ranges over S̄ plus the dummy predecessor s̄* (index S̄).
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma_bar: float
    abstract_start: np.ndarray

    def __post_init__(self) -> None:
        transition = _frozen(self.transition)
        reward = _frozen(self.reward)
        start = _frozen(self.abstract_start)
        if transition.ndim != 4:
            raise InvalidModelError(f"transition must have shape (S̄+1, S̄, Ā, S̄), got {transition.shape}")
        preds, num_states, num_actions, succ = transition.shape
        if preds != num_states + 1 or succ != num_states:
            raise InvalidModelError(f"transition must have shape (S̄+1, S̄, Ā, S̄), got {transition.shape}")
        if num_states == 0 or num_actions == 0:
            raise InvalidModelError("a 2-MDP needs at least one state and one action")
        if reward.shape != (preds, num_states, num_actions):
            raise InvalidModelError(f"reward must have shape {(preds, num_states, num_actions)}, got {reward.shape}")
        if start.shape != (num_states,):
            raise InvalidModelError(f"abstract_start must have shape {(num_states,)}")
        _check_distribution(transition, "abstract transition")
        _check_distribution(start, "abstract_start")
        if np.any(reward < 0.0) or np.any(reward > 1.0):
            raise InvalidModelError("abstract rewards must lie in [0, 1]")
        _check_gamma(self.gamma_bar, "gamma_bar")
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "abstract_start", start)
        object.__setattr__(self, "gamma_bar", float(self.gamma_bar))

    @property
    def num_abstract_states(self) -> int:
        return self.transition.shape[1]

    @property
    def num_abstract_actions(self) -> int:
        return self.transition.shape[2]

    @property
    def dummy_start(self) -> int:
        return self.num_abstract_states

    @classmethod
    def from_first_order(
        cls,
        transition: np.ndarray,
        reward: np.ndarray,
        gamma_bar: float,
        abstract_start: np.ndarray,
    ) -> "SecondOrderMdp":
        """Encode a first-order abstract MDP (T (S̄, Ā, S̄), R (S̄, Ā)) as a 2-MDP."""
        transition = np.asarray(transition, dtype=float)
        reward = np.asarray(reward, dtype=float)
        preds = transition.shape[0] + 1
        return cls(
            transition=np.broadcast_to(transition, (preds,) + transition.shape).copy(),
            reward=np.broadcast_to(reward, (preds,) + reward.shape).copy(),
            gamma_bar=gamma_bar,
            abstract_start=abstract_start,
        )

    def is_first_order(self, tol: float = 0.0) -> bool:
        """True when every predecessor row equals the self-pair row (s̄ s̄)."""
        n = self.num_abstract_states
        diag_t = self.transition[np.arange(n), np.arange(n)]
        diag_r = self.reward[np.arange(n), np.arange(n)]
        return bool(
            np.all(np.abs(self.transition - diag_t[None]) <= tol)
            and np.all(np.abs(self.reward - diag_r[None]) <= tol)
        )

    def first_order_view(self) -> GroundMdp:
        """The first-order model as a GroundMdp; only valid when is_first_order()."""
        if not self.is_first_order(tol=ROW_SUM_TOL):
            raise InvalidModelError("2-MDP depends on the previous state; no first-order view")
        n = self.num_abstract_states
        return GroundMdp(
            transition=self.transition[np.arange(n), np.arange(n)],
            reward=self.reward[np.arange(n), np.arange(n)],
            gamma=self.gamma_bar,
            start_distribution=self.abstract_start,
        )

    def with_reward(self, reward: np.ndarray) -> "SecondOrderMdp":
        return replace(self, reward=reward)


# ---------------------------------------------------------------------------
# POLICIES
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeterministicPolicy:
    """Action table indexed by state (1-MDP) or by (previous, current) pair (2-MDP)."""

    actions: np.ndarray

    def __post_init__(self) -> None:
        actions = _frozen(self.actions, dtype=np.int64)
        if np.any(actions < 0):
            raise InvalidModelError("policy actions must be non-negative indices")
        object.__setattr__(self, "actions", actions)

    def __call__(self, *index: int) -> int:
        return int(self.actions[index])

    def matrix(self, num_actions: int) -> np.ndarray:
        if self.actions.ndim != 1:
            raise InvalidModelError("only state-indexed policies have a matrix form")
        if np.any(self.actions >= num_actions):
            raise InvalidModelError("policy refers to an unknown action")
        out = np.zeros((self.actions.size, num_actions))
        out[np.arange(self.actions.size), self.actions] = 1.0
        return out


@dataclass(frozen=True)
class StochasticPolicy:
    """Table state → distribution over actions, shape (S, A)."""

    probabilities: np.ndarray

    def __post_init__(self) -> None:
        probabilities = _frozen(self.probabilities)
        if probabilities.ndim != 2:
            raise InvalidModelError("stochastic policy must be a (S, A) table")
        _check_distribution(probabilities, "policy")
        object.__setattr__(self, "probabilities", probabilities)

    def matrix(self, num_actions: int) -> np.ndarray:
        if self.probabilities.shape[1] != num_actions:
            raise InvalidModelError("policy has the wrong number of actions")
        return np.array(self.probabilities)

    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.probabilities.max(axis=1), 1.0, atol=ROW_SUM_TOL)))


Policy = Union[DeterministicPolicy, StochasticPolicy]


def policy_matrix(policy: Policy, num_states: int, num_actions: int) -> np.ndarray:
    """Any policy as a (S, A) row-stochastic matrix, checked for totality."""
    matrix = policy.matrix(num_actions)
    if matrix.shape[0] != num_states:
        raise InvalidModelError(f"policy covers {matrix.shape[0]} states, MDP has {num_states}")
    return matrix


def enumerate_deterministic_policies(
    num_states: int, num_actions: int, cap: int
) -> Iterator[np.ndarray]:
    """Every action table in lexicographic order; refuses when A^S exceeds cap."""
    size = num_actions ** num_states
    if size > cap:
        raise EnumerationCapError(
            f"{num_actions}^{num_states} = {size} policies exceed the cap {cap}", size, cap
        )
    for combo in itertools.product(range(num_actions), repeat=num_states):
        yield np.array(combo, dtype=np.int64)


# ---------------------------------------------------------------------------
# EVALUATION AND VALUE ITERATION
# ---------------------------------------------------------------------------


def induced_chain(mdp: GroundMdp, policy: Policy) -> tuple:
    """(P_π, r_π) of the Markov reward process induced by a policy."""
    pi = policy_matrix(policy, mdp.num_states, mdp.num_actions)
    p_pi = np.einsum("sa,sax->sx", pi, mdp.transition)
    r_pi = np.einsum("sa,sa->s", pi, mdp.reward)
    return p_pi, r_pi


def evaluate_policy(mdp: GroundMdp, policy: Policy) -> np.ndarray:
    """V^π solving (I - γ P_π) V = r_π."""
    p_pi, r_pi = induced_chain(mdp, policy)
    return solve_linear(np.eye(mdp.num_states) - mdp.gamma * p_pi, r_pi)


def start_value(mdp: GroundMdp, values: np.ndarray) -> float:
    """V_{ν₀}: inner product with the start distribution."""
    return float(mdp.start_distribution @ values)


def evaluate_q(mdp: GroundMdp, values: np.ndarray) -> np.ndarray:
    return mdp.reward + mdp.gamma * mdp.transition @ values


def bellman_optimality_backup(mdp: GroundMdp, q: np.ndarray) -> np.ndarray:
    return evaluate_q(mdp, q.max(axis=1))


def vi_iterations(gamma: float, eps: float, proof: bool = True) -> int:
    """
    Number of value-iteration backups for an eps-optimal greedy policy.

    With proof=True the count uses ln(2/((1-γ)²ε)); otherwise ln(2/((1-γ)ε)).
    """
    _check_gamma(gamma)
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    scale = (1.0 - gamma) ** 2 if proof else (1.0 - gamma)
    return max(1, math.ceil(math.log(2.0 / (scale * eps)) / (1.0 - gamma)))


def truncation_horizon(gamma: float, eps: float) -> int:
    """H such that the first H discounted rewards are within eps of the value."""
    _check_gamma(gamma)
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    return max(1, math.ceil(math.log(1.0 / (eps * (1.0 - gamma))) / (1.0 - gamma)))


def value_iteration(mdp: GroundMdp, iterations: int) -> tuple:
    """
    k Bellman-optimality backups from Q = 0.

    Returns (Q, greedy DeterministicPolicy); ties go to the lowest action.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    q = np.zeros((mdp.num_states, mdp.num_actions))
    delta = 0.0
    for _ in range(iterations):
        new_q = bellman_optimality_backup(mdp, q)
        delta = float(np.max(np.abs(new_q - q)))
        q = new_q
    logger.debug("[VI] %d backups on %d states, last delta %.3e", iterations, mdp.num_states, delta)
    return q, DeterministicPolicy(np.argmax(q, axis=1))


# ---------------------------------------------------------------------------
# 2-MDP HELPERS
# ---------------------------------------------------------------------------


def bellman_backup_2mdp(model: SecondOrderMdp, q: np.ndarray) -> np.ndarray:
    """Q(p s, a) ← R̄(p s, a) + γ̄ Σ_{s'} T̄(s' | p s, a) max_{a'} Q(s s', a')."""
    n = model.num_abstract_states
    next_values = q[:n].max(axis=2)  # (s, s')
    return model.reward + model.gamma_bar * np.einsum("psax,sx->psa", model.transition, next_values)


def q_iteration_2mdp(model: SecondOrderMdp, iterations: int) -> np.ndarray:
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    q = np.zeros(model.reward.shape)
    for _ in range(iterations):
        q = bellman_backup_2mdp(model, q)
    return q


def value_iteration_2mdp(model: SecondOrderMdp, iterations: int) -> DeterministicPolicy:
    """Greedy policy over (S̄+1) x S̄ pairs after k backups; dummy rows included."""
    q = q_iteration_2mdp(model, iterations)
    logger.debug("[VI] %d backups on a 2-MDP with %d states", iterations, model.num_abstract_states)
    return DeterministicPolicy(np.argmax(q, axis=2))


def _policy_rows_2mdp(model: SecondOrderMdp, policy: DeterministicPolicy) -> tuple:
    n = model.num_abstract_states
    actions = policy.actions
    if actions.shape != (n + 1, n):
        raise InvalidModelError(f"2-MDP policy must have shape {(n + 1, n)}, got {actions.shape}")
    if np.any(actions >= model.num_abstract_actions):
        raise InvalidModelError("2-MDP policy refers to an unknown abstract action")
    p_idx, s_idx = np.meshgrid(np.arange(n + 1), np.arange(n), indexing="ij")
    t_pi = model.transition[p_idx, s_idx, actions]  # (p, s, s')
    r_pi = model.reward[p_idx, s_idx, actions]      # (p, s)
    return t_pi, r_pi


def evaluate_policy_2mdp(model: SecondOrderMdp, policy: DeterministicPolicy) -> np.ndarray:
    """
    Values V̄(p s) over all (S̄+1) x S̄ pairs.

    Pair (p, s) is row p*S̄ + s; moving to s' lands on pair (s, s').
    """
    n = model.num_abstract_states
    t_pi, r_pi = _policy_rows_2mdp(model, policy)
    size = (n + 1) * n
    matrix = np.zeros((size, size))
    rows = np.arange(size)
    current = np.tile(np.arange(n), n + 1)  # s of each row
    for succ in range(n):
        matrix[rows, current * n + succ] = t_pi.reshape(size, n)[:, succ]
    values = solve_linear(np.eye(size) - model.gamma_bar * matrix, r_pi.reshape(size))
    return values.reshape(n + 1, n)


def recompose_2mdp_value(
    model: SecondOrderMdp, policy: DeterministicPolicy, values: np.ndarray
) -> np.ndarray:
    """
    Right-hand side of the self-loop recomposition of 2-MDP values.

    V(p s) = R_ps + γ T_{s|ps} R_ss / (1 - γ T_{s|ss})
             + Σ_{s'≠s} (γ T_{s'|ps} + γ² T_{s|ps} T_{s'|ss} / (1 - γ T_{s|ss})) V(s s')
    """
    n = model.num_abstract_states
    g = model.gamma_bar
    t_pi, r_pi = _policy_rows_2mdp(model, policy)
    idx = np.arange(n)
    t_self = t_pi[idx, idx]                # T(· | s s), shape (s, s')
    loop = t_self[idx, idx]                # T(s | s s)
    r_self = r_pi[idx, idx]                # R_ss
    enter = t_pi[:, idx, idx]              # T(s | p s), shape (p, s)
    geometric = 1.0 / (1.0 - g * loop)     # (s,)
    out = r_pi + g * enter * r_self[None, :] * geometric[None, :]
    inner = values[:n]                     # V(s s'), shape (s, s')
    off_diag = 1.0 - np.eye(n)
    direct = g * np.einsum("psx,sx->ps", t_pi * off_diag[None], inner)
    via_loop = (g ** 2) * enter * geometric[None, :] * np.einsum("sx,sx->s", t_self * off_diag, inner)[None, :]
    return out + direct + via_loop


def two_mdp_start_value(model: SecondOrderMdp, values: np.ndarray) -> float:
    """V̄_{ν̄₀} = Σ ν̄₀(s̄) V̄(s̄* s̄)."""
    return float(model.abstract_start @ values[model.dummy_start])


def identity_abstract_model(mdp: GroundMdp) -> SecondOrderMdp:
    """The MDP itself as a (first-order) abstract model under the identity mapping."""
    return SecondOrderMdp.from_first_order(
        mdp.transition, mdp.reward, mdp.gamma, mdp.start_distribution
    )


# ---------------------------------------------------------------------------
# OCCUPANCY MEASURES
# ---------------------------------------------------------------------------


Source = Union[int, np.ndarray, Sequence[float]]


@dataclass(frozen=True)
class OccupancyMeasure:
    """
    Normalized discounted visitation d = (1-γ) Σ γᵗ Pr(s_t = ·).

    values has shape (S,) for kind "state" and (S, A) for "state-action".
    """

    kind: Literal["state", "state-action"]
    values: np.ndarray
    gamma: float
    source: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        if np.any(values < -OCCUPANCY_SUM_TOL):
            raise InvalidModelError("occupancy has negative entries")
        total = float(values.sum())
        if abs(total - 1.0) > OCCUPANCY_SUM_TOL:
            raise InvalidModelError(f"occupancy sums to {total}, expected 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "source", _frozen(self.source))

    def state_marginal(self) -> np.ndarray:
        return self.values if self.kind == "state" else self.values.sum(axis=1)


def source_distribution(mdp: GroundMdp, source: Source) -> np.ndarray:
    """
    A state index, the dummy start (→ ν₀), or an explicit distribution.
    """
    if isinstance(source, (int, np.integer)):
        s = int(source)
        if s == mdp.dummy_start:
            return np.array(mdp.start_distribution)
        if not 0 <= s < mdp.num_states:
            raise InvalidModelError(f"source state {s} out of range")
        out = np.zeros(mdp.num_states)
        out[s] = 1.0
        return out
    dist = np.asarray(source, dtype=float)
    if dist.shape != (mdp.num_states,):
        raise InvalidModelError(f"source distribution must have shape {(mdp.num_states,)}")
    _check_distribution(dist, "source distribution", tol=OCCUPANCY_SUM_TOL)
    return dist


def occupancy(
    mdp: GroundMdp,
    policy: Policy,
    source: Source,
    kind: Literal["state", "state-action"] = "state",
) -> OccupancyMeasure:
    """Solve (I - γ P_πᵀ) d = (1-γ) ν; the state-action variant is d·π."""
    nu = source_distribution(mdp, source)
    p_pi, _ = induced_chain(mdp, policy)
    d = solve_linear(np.eye(mdp.num_states) - mdp.gamma * p_pi.T, (1.0 - mdp.gamma) * nu)
    d = np.clip(d, 0.0, None)
    if kind == "state-action":
        pi = policy_matrix(policy, mdp.num_states, mdp.num_actions)
        return OccupancyMeasure("state-action", d[:, None] * pi, mdp.gamma, nu)
    return OccupancyMeasure("state", d, mdp.gamma, nu)


def value_from_occupancy(measure: OccupancyMeasure, rewards: np.ndarray) -> float:
    """⟨d, R⟩ / (1-γ) for a state-action occupancy."""
    if measure.kind != "state-action":
        raise InvalidModelError("value_from_occupancy needs a state-action occupancy")
    rewards = np.asarray(rewards, dtype=float)
    if rewards.shape != measure.values.shape:
        raise InvalidModelError("reward table does not match the occupancy shape")
    return float(np.sum(measure.values * rewards) / (1.0 - measure.gamma))


# ---------------------------------------------------------------------------
# CONSTRAINED MDPs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CmdpSpec:
    """A base MDP with auxiliary rewards R_i and lower limits l_i on their values."""

    base: GroundMdp
    auxiliary_rewards: List[np.ndarray]
    lower_limits: List[float]

    def __post_init__(self) -> None:
        if len(self.auxiliary_rewards) != len(self.lower_limits):
            raise InvalidModelError("auxiliary_rewards and lower_limits differ in length")
        shape = self.base.reward.shape
        rewards = []
        for r in self.auxiliary_rewards:
            r = _frozen(r)
            if r.shape != shape:
                raise InvalidModelError(f"auxiliary reward must have shape {shape}")
            if np.any(r < 0.0) or np.any(r > 1.0):
                raise InvalidModelError("auxiliary rewards must lie in [0, 1]")
            rewards.append(r)
        limits = [float(l) for l in self.lower_limits]
        if any(not 0.0 <= l <= 1.0 for l in limits):
            raise InvalidModelError("lower limits must lie in [0, 1]")
        object.__setattr__(self, "auxiliary_rewards", rewards)
        object.__setattr__(self, "lower_limits", limits)

    @property
    def num_constraints(self) -> int:
        return len(self.lower_limits)


def cmdp_values(cmdp: CmdpSpec, policy: Policy, source: Source) -> np.ndarray:
    """Auxiliary values V_i^π from the source, one per constraint."""
    measure = occupancy(cmdp.base, policy, source, kind="state-action")
    return np.array([value_from_occupancy(measure, r) for r in cmdp.auxiliary_rewards])


def is_feasible(cmdp: CmdpSpec, policy: Policy, source: Source, slack: float = 0.0) -> bool:
    """Membership in the slack-feasible set: V_i ≥ l_i - slack for every i."""
    if cmdp.num_constraints == 0:
        return True
    values = cmdp_values(cmdp, policy, source)
    return bool(np.all(values >= np.asarray(cmdp.lower_limits) - slack))


def uniform_policy(num_states: int, num_actions: int) -> StochasticPolicy:
    return StochasticPolicy(np.full((num_states, num_actions), 1.0 / num_actions))
