"""
Dense linear programming for occupancy measures.

This module handles:
- A two-phase tableau simplex with Bland's rule (maximization, x ≥ lb).
- Dual values recovered from the optimal basis.
- Builders for the occupancy-measure primal, generic CMDP programs and the
  constrained realization program of a block.
- Turning an occupancy into a policy, and a plain-text LP dump format.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .config import LP_ITERATION_CAP, OCCUPANCY_SUM_TOL, PIVOT_TOL, ZERO_MASS_TOL
from .errors import InvalidModelError, LpIterationLimitError, ParseError
from .mdp import CmdpSpec, GroundMdp, StochasticPolicy, source_distribution

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# TYPES
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearProgram:
    """
    max cᵀx  s.t.  A x = b,  G x ≥ h,  x ≥ lb.

    ge_labels optionally names the inequality rows (e.g. the target block of a
    realization constraint).
    """

    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ge_matrix: np.ndarray
    ge_rhs: np.ndarray
    lower_bounds: Optional[np.ndarray] = None
    ge_labels: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.size
        a = np.asarray(self.eq_matrix, dtype=float).reshape(-1, n)
        b = np.asarray(self.eq_rhs, dtype=float).ravel()
        g = np.asarray(self.ge_matrix, dtype=float).reshape(-1, n)
        h = np.asarray(self.ge_rhs, dtype=float).ravel()
        lb = np.zeros(n) if self.lower_bounds is None else np.asarray(self.lower_bounds, dtype=float).ravel()
        if a.shape[0] != b.size or g.shape[0] != h.size or lb.size != n:
            raise InvalidModelError("linear program dimensions are inconsistent")
        if self.ge_labels and len(self.ge_labels) != h.size:
            raise InvalidModelError("ge_labels must name every inequality row")
        for arr in (c, a, b, g, h, lb):
            if not np.all(np.isfinite(arr)):
                raise InvalidModelError("linear program data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_matrix", a)
        object.__setattr__(self, "eq_rhs", b)
        object.__setattr__(self, "ge_matrix", g)
        object.__setattr__(self, "ge_rhs", h)
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "ge_labels", tuple(int(x) for x in self.ge_labels))

    @property
    def num_variables(self) -> int:
        return self.objective.size

    @property
    def num_eq(self) -> int:
        return self.eq_rhs.size

    @property
    def num_ge(self) -> int:
        return self.ge_rhs.size


@dataclass
class LpSolution:
    """
    Result of solve_lp.

    eq_duals u = ∂obj/∂b (free sign); ge_duals w = -∂obj/∂h ≥ 0.
    """

    status: Literal["optimal", "infeasible", "unbounded"]
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    eq_duals: Optional[np.ndarray] = None
    ge_duals: Optional[np.ndarray] = None
    iterations: int = 0
    primal_residual: float = float("nan")
    slackness_residual: float = float("nan")
    infeasibility: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# SIMPLEX
# ---------------------------------------------------------------------------


class _Tableau:
    """
    Dense tableau; the last row holds reduced costs d_j = c_Bᵀ B⁻¹ A_j - c_j
    and the last column the basic values (objective in the corner).
    """

    def __init__(self, matrix: np.ndarray, rhs: np.ndarray, basis: List[int]):
        m, total = matrix.shape
        self.table = np.zeros((m + 1, total + 1))
        self.table[:m, :total] = matrix
        self.table[:m, -1] = rhs
        self.basis = basis
        self.iterations = 0

    def set_objective(self, costs: np.ndarray) -> None:
        m = len(self.basis)
        row = -np.append(costs, 0.0)
        for r, col in enumerate(self.basis):
            if costs[col] != 0.0:
                row += costs[col] * self.table[r]
        self.table[m] = row

    def _pivot(self, row: int, col: int) -> None:
        t = self.table
        t[row] /= t[row, col]
        for r in range(t.shape[0]):
            if r != row and t[r, col] != 0.0:
                t[r] -= t[r, col] * t[row]
        self.basis[row] = col

    def _enter(self, allowed: int) -> int:
        # Bland: lowest index with a negative reduced cost
        reduced = self.table[-1, :allowed]
        hits = np.flatnonzero(reduced < -PIVOT_TOL)
        return int(hits[0]) if hits.size else -1

    def _leave(self, col: int) -> int:
        column = self.table[:-1, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return -1
        ratios = self.table[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        # Bland: among ties, the lowest basic variable leaves
        return int(min(ties, key=lambda r: self.basis[r]))

    def run(self, allowed: int, budget: int) -> str:
        while True:
            col = self._enter(allowed)
            if col == -1:
                return "optimal"
            row = self._leave(col)
            if row == -1:
                return "unbounded"
            if self.iterations >= budget:
                raise LpIterationLimitError(f"simplex exceeded {budget} pivots")
            self._pivot(row, col)
            self.iterations += 1


def primal_residual(lp: LinearProgram, x: np.ndarray) -> float:
    """Worst violation of the equalities, inequalities and lower bounds."""
    parts = [0.0]
    if lp.num_eq:
        parts.append(float(np.max(np.abs(lp.eq_matrix @ x - lp.eq_rhs))))
    if lp.num_ge:
        parts.append(float(np.max(lp.ge_rhs - lp.ge_matrix @ x)))
    parts.append(float(np.max(lp.lower_bounds - x)) if x.size else 0.0)
    return max(parts)


def dual_objective(lp: LinearProgram, solution: LpSolution) -> float:
    """(b - A lb)ᵀu - (h - G lb)ᵀw + cᵀlb."""
    lb = lp.lower_bounds
    value = float(lp.objective @ lb)
    if lp.num_eq:
        value += float((lp.eq_rhs - lp.eq_matrix @ lb) @ solution.eq_duals)
    if lp.num_ge:
        value -= float((lp.ge_rhs - lp.ge_matrix @ lb) @ solution.ge_duals)
    return value


def reduced_costs(lp: LinearProgram, solution: LpSolution) -> np.ndarray:
    """Aᵀu - Gᵀw - c, non-negative at a dual-feasible point."""
    out = -np.array(lp.objective)
    if lp.num_eq:
        out += lp.eq_matrix.T @ solution.eq_duals
    if lp.num_ge:
        out -= lp.ge_matrix.T @ solution.ge_duals
    return out


def slackness_residual(lp: LinearProgram, solution: LpSolution) -> float:
    x = solution.x - lp.lower_bounds
    parts = [float(np.max(np.abs(x * reduced_costs(lp, solution)))) if x.size else 0.0]
    if lp.num_ge:
        slack = lp.ge_matrix @ solution.x - lp.ge_rhs
        parts.append(float(np.max(np.abs(solution.ge_duals * slack))))
    return max(parts)


def solve_lp(lp: LinearProgram, iteration_cap: int = LP_ITERATION_CAP) -> LpSolution:
    """
    Two-phase dense simplex.

    Variables are shifted to y = x - lb ≥ 0; inequality rows get surplus
    columns and every row an artificial column for phase I. Artificial
    columns stay in the tableau but may not enter in phase II.
    """
    n, m_eq, m_ge = lp.num_variables, lp.num_eq, lp.num_ge
    m = m_eq + m_ge
    lb = lp.lower_bounds
    c = lp.objective

    if m == 0:
        if np.any(c > PIVOT_TOL):
            return LpSolution(status="unbounded")
        x = np.array(lb)
        return LpSolution(status="optimal", x=x, objective=float(c @ x), eq_duals=np.zeros(0),
                          ge_duals=np.zeros(0), primal_residual=0.0, slackness_residual=0.0)

    # standard form [A 0; G -I] y' = [b - A lb; h - G lb]
    core = np.zeros((m, n + m_ge))
    core[:m_eq, :n] = lp.eq_matrix
    core[m_eq:, :n] = lp.ge_matrix
    core[m_eq:, n:] = -np.eye(m_ge)
    rhs = np.concatenate([lp.eq_rhs - lp.eq_matrix @ lb, lp.ge_rhs - lp.ge_matrix @ lb])

    sign = np.where(rhs < 0.0, -1.0, 1.0)
    matrix = np.hstack([core * sign[:, None], np.eye(m)])
    width = n + m_ge
    tableau = _Tableau(matrix, rhs * sign, basis=list(range(width, width + m)))

    # phase I: max -Σ artificials
    phase_one = np.zeros(width + m)
    phase_one[width:] = -1.0
    tableau.set_objective(phase_one)
    tableau.run(allowed=width + m, budget=iteration_cap)
    infeasibility = -float(tableau.table[-1, -1])
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if infeasibility > 1e-9 * scale:
        logger.debug("[LP] infeasible after phase I (%.3e), %d pivots", infeasibility, tableau.iterations)
        return LpSolution(status="infeasible", iterations=tableau.iterations, infeasibility=infeasibility)

    # drive zero-valued artificials out of the basis where possible
    for r, col in enumerate(list(tableau.basis)):
        if col >= width:
            candidates = np.flatnonzero(np.abs(tableau.table[r, :width]) > PIVOT_TOL)
            if candidates.size:
                tableau._pivot(r, int(candidates[0]))

    phase_two = np.zeros(width + m)
    phase_two[:n] = c
    tableau.set_objective(phase_two)
    status = tableau.run(allowed=width, budget=iteration_cap)
    if status == "unbounded":
        logger.debug("[LP] unbounded after %d pivots", tableau.iterations)
        return LpSolution(status="unbounded", iterations=tableau.iterations)

    y = np.zeros(width + m)
    for r, col in enumerate(tableau.basis):
        y[col] = tableau.table[r, -1]
    x = np.clip(y[:n], 0.0, None) + lb

    # duals from the final basis: Bᵀπ = c_B on the unflipped rows
    full = np.hstack([core, np.diag(sign)])
    basis_matrix = full[:, tableau.basis]
    pi = linalg.solve(basis_matrix.T, phase_two[tableau.basis])
    solution = LpSolution(
        status="optimal",
        x=x,
        objective=float(c @ x),
        eq_duals=pi[:m_eq],
        ge_duals=-pi[m_eq:],
        iterations=tableau.iterations,
    )
    solution.primal_residual = primal_residual(lp, x)
    solution.slackness_residual = slackness_residual(lp, solution)
    logger.debug("[LP] optimal %.6g after %d pivots (residuals %.2e / %.2e)",
                 solution.objective, solution.iterations, solution.primal_residual, solution.slackness_residual)
    return solution


# ---------------------------------------------------------------------------
# OCCUPANCY PROGRAMS
# ---------------------------------------------------------------------------


def _flow_constraints(mdp: GroundMdp, nu: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eᵀb - γPᵀb = (1-γ)ν over b indexed s*A + a."""
    num_states, num_actions = mdp.num_states, mdp.num_actions
    selector = np.repeat(np.eye(num_states), num_actions, axis=0)  # (SA, S)
    successor = mdp.transition.reshape(num_states * num_actions, num_states)
    return (selector - mdp.gamma * successor).T, (1.0 - mdp.gamma) * nu


def build_primal_occupancy_lp(mdp: GroundMdp, nu) -> LinearProgram:
    """max bᵀR over discounted state-action occupancies from ν."""
    dist = source_distribution(mdp, nu)
    eq_matrix, eq_rhs = _flow_constraints(mdp, dist)
    return LinearProgram(
        objective=mdp.reward.ravel(),
        eq_matrix=eq_matrix,
        eq_rhs=eq_rhs,
        ge_matrix=np.zeros((0, mdp.num_states * mdp.num_actions)),
        ge_rhs=np.zeros(0),
    )


def build_cmdp_lp(cmdp: CmdpSpec, nu, labels: Sequence[int] = ()) -> LinearProgram:
    """The occupancy LP plus ⟨b, R_i⟩ ≥ (1-γ) l_i for every auxiliary reward."""
    base = build_primal_occupancy_lp(cmdp.base, nu)
    gamma = cmdp.base.gamma
    ge = np.array([r.ravel() for r in cmdp.auxiliary_rewards]).reshape(cmdp.num_constraints, -1)
    return LinearProgram(
        objective=base.objective,
        eq_matrix=base.eq_matrix,
        eq_rhs=base.eq_rhs,
        ge_matrix=ge,
        ge_rhs=(1.0 - gamma) * np.asarray(cmdp.lower_limits, dtype=float),
        ge_labels=tuple(labels),
    )


def realization_cmdp(block, h_targets: np.ndarray, eps_t: float) -> Tuple[CmdpSpec, List[int]]:
    """
    CMDP on a block MDP with one auxiliary reward per other abstract state:
    R_{s̄'} = 1 on the exits into s̄', limit max(0, (h̃(s̄') - εT)/(1-γ)).
    """
    gamma = block.gamma
    targets = []
    rewards, limits = [], []
    for other in range(block.num_abstract_states):
        if other == block.abstract_state:
            continue
        aux = np.zeros((block.num_local_states, block.num_actions))
        aux[block.local_blocks == other] = 1.0
        rewards.append(aux)
        limits.append(min(1.0, max(0.0, (float(h_targets[other]) - eps_t) / (1.0 - gamma))))
        targets.append(other)
    return CmdpSpec(base=block.mdp, auxiliary_rewards=rewards, lower_limits=limits), targets


def local_distribution(block, nu: np.ndarray) -> np.ndarray:
    """A ground-indexed entry distribution moved onto block-MDP indices."""
    nu = np.asarray(nu, dtype=float)
    out = np.zeros(block.num_local_states)
    for s in np.flatnonzero(nu > 0.0):
        if not block.in_block(int(s)):
            raise InvalidModelError(f"entry distribution puts mass on {int(s)}, outside block {block.abstract_state}")
        out[block.local_index(int(s))] = nu[s]
    if abs(out.sum() - 1.0) > OCCUPANCY_SUM_TOL:
        raise InvalidModelError("entry distribution must sum to 1")
    return out


def build_constrained_realization_lp(block, nu: np.ndarray, h_targets: np.ndarray, eps_t: float) -> LinearProgram:
    """Block occupancy LP with Bᵀb ≥ h̃ - εT per target block; ν is ground-indexed."""
    cmdp, targets = realization_cmdp(block, h_targets, eps_t)
    return build_cmdp_lp(cmdp, local_distribution(block, nu), labels=targets)


@dataclass
class ExtractedPolicy:
    policy: StochasticPolicy
    uniform_states: List[int] = field(default_factory=list)


def extract_policy_from_occupancy(b: np.ndarray, model) -> ExtractedPolicy:
    """
    π(a|s) = b(s,a) / Σ_a b(s,a); states with mass ≤ ZERO_MASS_TOL get the
    uniform policy and are listed in uniform_states.
    """
    num_actions = model.num_actions
    table = np.clip(np.asarray(b, dtype=float).reshape(-1, num_actions), 0.0, None)
    mass = table.sum(axis=1)
    empty = mass <= ZERO_MASS_TOL
    policy = np.full(table.shape, 1.0 / num_actions)
    policy[~empty] = table[~empty] / mass[~empty, None]
    return ExtractedPolicy(StochasticPolicy(policy), np.flatnonzero(empty).tolist())


def shaped_block_rewards(block, exit_values: np.ndarray) -> np.ndarray:
    """
    Block rewards with a terminal value on every exit: exit_values is indexed by
    ground state and is added to the (otherwise zero) reward rows of the exits.
    """
    rewards = np.array(block.mdp.reward)
    n = block.num_block_states
    values = np.asarray(exit_values, dtype=float)
    rewards[n:block.sink] = values[block.exits][:, None]
    return rewards


def terminal_values_from_duals(block, lp: LinearProgram, solution: LpSolution, num_ground_states: int) -> np.ndarray:
    """Ground-indexed exit values w_{F(x)} read off the realization-constraint duals."""
    values = np.zeros(num_ground_states)
    for label, w in zip(lp.ge_labels, solution.ge_duals):
        values[block.exits[block.exit_blocks == label]] = w
    return values


# ---------------------------------------------------------------------------
# PLAIN-TEXT DUMP
# ---------------------------------------------------------------------------


def _fmt(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def dump_lp(lp: LinearProgram) -> str:
    """
    One row per line:
      obj c_1 ... c_n
      eq  a_1 ... a_n | b
      ge  g_1 ... g_n | h [# label]
      lb  l_1 ... l_n
    """
    lines = [f"obj {_fmt(lp.objective)}"]
    for row, rhs in zip(lp.eq_matrix, lp.eq_rhs):
        lines.append(f"eq {_fmt(row)} | {float(rhs)!r}")
    for i, (row, rhs) in enumerate(zip(lp.ge_matrix, lp.ge_rhs)):
        label = f" # {lp.ge_labels[i]}" if lp.ge_labels else ""
        lines.append(f"ge {_fmt(row)} | {float(rhs)!r}{label}")
    lines.append(f"lb {_fmt(lp.lower_bounds)}")
    return "\n".join(lines) + "\n"


def load_lp(text: str, path: Optional[str] = None) -> LinearProgram:
    objective = None
    lower = None
    eq_rows, eq_rhs, ge_rows, ge_rhs, labels = [], [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        label = None
        if "#" in line:
            line, _, tail = line.partition("#")
            line = line.strip()
            try:
                label = int(tail.strip())
            except ValueError:
                raise ParseError(f"bad row label {tail.strip()!r}", lineno, path) from None
        kind, _, body = line.partition(" ")
        try:
            if kind in ("obj", "lb"):
                values = np.array([float(t) for t in body.split()])
                if kind == "obj":
                    objective = values
                else:
                    lower = values
            elif kind in ("eq", "ge"):
                coeffs, sep, rhs = body.partition("|")
                if not sep:
                    raise ParseError(f"{kind} row needs '| rhs'", lineno, path)
                row = [float(t) for t in coeffs.split()]
                (eq_rows if kind == "eq" else ge_rows).append(row)
                (eq_rhs if kind == "eq" else ge_rhs).append(float(rhs))
                if kind == "ge" and label is not None:
                    labels.append(label)
            else:
                raise ParseError(f"unknown row kind {kind!r}", lineno, path)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad number in {kind} row: {exc}", lineno, path) from None
        if objective is not None and any(len(r) != objective.size for r in eq_rows + ge_rows):
            raise ParseError("row length does not match the objective", lineno, path)
    if objective is None:
        raise ParseError("missing obj row", 0, path)
    n = objective.size
    try:
        return LinearProgram(
            objective=objective,
            eq_matrix=np.array(eq_rows).reshape(-1, n),
            eq_rhs=np.array(eq_rhs),
            ge_matrix=np.array(ge_rows).reshape(-1, n),
            ge_rhs=np.array(ge_rhs),
            lower_bounds=lower,
            ge_labels=tuple(labels) if len(labels) == len(ge_rhs) else (),
        )
    except InvalidModelError as exc:
        raise ParseError(str(exc), 0, path) from exc
