import numpy as np
import pytest
from scipy.optimize import linprog

from rarl_kit.errors import LpIterationLimitError, ParseError
from rarl_kit.lp import (
    LinearProgram,
    build_cmdp_lp,
    build_constrained_realization_lp,
    build_primal_occupancy_lp,
    dual_objective,
    dump_lp,
    extract_policy_from_occupancy,
    load_lp,
    shaped_block_rewards,
    solve_lp,
    terminal_values_from_duals,
)
from rarl_kit.mdp import CmdpSpec, GroundMdp, evaluate_policy, start_value, value_iteration
from rarl_kit.realizer import realization_problem_for

from conftest import bandit, rooms_pair


def random_feasible_lp(seed: int, n: int = 6, m_eq: int = 2, m_ge: int = 3) -> LinearProgram:
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.5, 2.0, n)
    eq = rng.normal(size=(m_eq, n))
    ge = rng.normal(size=(m_ge, n))
    # a budget row keeps the program bounded
    ge = np.vstack([ge, -np.ones(n)])
    ge_rhs = np.append(ge[:-1] @ x0 - 1.0, -(x0.sum() + 5.0))
    return LinearProgram(rng.normal(size=n), eq, eq @ x0, ge, ge_rhs)


@pytest.mark.parametrize("seed", range(5))
def test_simplex_matches_highs(seed):
    lp = random_feasible_lp(seed)
    solution = solve_lp(lp)
    reference = linprog(-lp.objective, A_ub=-lp.ge_matrix, b_ub=-lp.ge_rhs,
                        A_eq=lp.eq_matrix, b_eq=lp.eq_rhs, bounds=(0, None), method="highs")
    assert solution.optimal
    assert solution.objective == pytest.approx(-reference.fun, abs=1e-8)
    assert solution.primal_residual <= 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_strong_duality_and_slackness(seed):
    lp = random_feasible_lp(seed)
    solution = solve_lp(lp)
    assert dual_objective(lp, solution) == pytest.approx(solution.objective, abs=1e-8)
    assert np.all(solution.ge_duals >= -1e-9)
    assert solution.slackness_residual <= 1e-8


def test_infeasible_program_detected():
    lp = LinearProgram(np.ones(2), np.array([[1.0, 1.0]]), np.array([-1.0]), np.zeros((0, 2)), np.zeros(0))
    assert solve_lp(lp).status == "infeasible"


def test_unbounded_program_detected():
    lp = LinearProgram(np.array([1.0]), np.zeros((0, 1)), np.zeros(0), np.array([[1.0]]), np.array([0.0]))
    assert solve_lp(lp).status == "unbounded"


def test_lower_bounds_are_respected():
    lp = LinearProgram(np.array([-1.0, -1.0]), np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)), np.zeros(0),
                       lower_bounds=np.array([0.5, 1.5]))
    solution = solve_lp(lp)
    assert solution.x == pytest.approx([0.5, 1.5])


def test_iteration_cap_raises():
    lp = random_feasible_lp(0)
    with pytest.raises(LpIterationLimitError):
        solve_lp(lp, iteration_cap=0)


def test_occupancy_lp_recovers_optimal_value(small_mdp):
    solution = solve_lp(build_primal_occupancy_lp(small_mdp, small_mdp.dummy_start))
    _, policy = value_iteration(small_mdp, 400)
    values = evaluate_policy(small_mdp, policy)
    assert solution.objective / (1 - small_mdp.gamma) == pytest.approx(start_value(small_mdp, values), abs=1e-8)
    # with full-support ν the flow duals are the optimal values
    assert solution.eq_duals == pytest.approx(values, abs=1e-7)


def test_extracted_policy_is_optimal(small_mdp):
    solution = solve_lp(build_primal_occupancy_lp(small_mdp, small_mdp.dummy_start))
    extracted = extract_policy_from_occupancy(solution.x, small_mdp)
    value = start_value(small_mdp, evaluate_policy(small_mdp, extracted.policy))
    assert value == pytest.approx(solution.objective / (1 - small_mdp.gamma), abs=1e-8)


def test_zero_mass_states_act_uniformly():
    mdp = GroundMdp(np.array([[[1.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [0.0, 1.0]]]),
                    np.zeros((2, 2)), 0.9, np.array([1.0, 0.0]))
    extracted = extract_policy_from_occupancy(np.array([0.1, 0.9, 0.0, 0.0]), mdp)
    assert extracted.uniform_states == [1]
    assert extracted.policy.probabilities[1].tolist() == [0.5, 0.5]
    assert extracted.policy.probabilities[0] == pytest.approx([0.1, 0.9])


def test_cmdp_lp_trades_reward_for_constraint():
    mdp = bandit(0.5)
    cmdp = CmdpSpec(mdp, [np.array([[1.0, 0.0]])], [0.5])
    solution = solve_lp(build_cmdp_lp(cmdp, 0))
    # half of the normalized occupancy must go to the first arm
    assert solution.x == pytest.approx([0.25, 0.75])
    assert solution.objective == pytest.approx(0.25 * 0.2 + 0.75 * 0.8)
    assert solution.ge_duals[0] > 0.0


def test_dump_then_load_keeps_labels():
    lp = random_feasible_lp(1)
    lp = LinearProgram(lp.objective, lp.eq_matrix, lp.eq_rhs, lp.ge_matrix, lp.ge_rhs,
                       ge_labels=tuple(range(lp.num_ge)))
    loaded = load_lp(dump_lp(lp))
    assert np.array_equal(loaded.ge_matrix, lp.ge_matrix)
    assert loaded.ge_labels == lp.ge_labels


def test_load_reports_line_of_bad_row():
    text = "obj 1 2\neq 1 1 | 1\ngx 1 0 | 0\n"
    with pytest.raises(ParseError, match=":3:"):
        load_lp(text, path="bad.lp")


@pytest.mark.parametrize("seed", range(3))
def test_constraint_duals_price_exit_values(seed):
    pair = rooms_pair(seed)
    dummy = pair.abstract.num_abstract_states
    tuple_ = next(t for t in pair.applicable_tuples() if t[0] != dummy)
    problem = realization_problem_for(pair, tuple_)
    lp = build_constrained_realization_lp(problem.block, problem.nu, problem.h_targets, problem.eps_t)
    solution = solve_lp(lp)
    assert solution.optimal

    # the Lagrangian with optimal multipliers is an unconstrained block problem
    values = terminal_values_from_duals(problem.block, lp, solution, pair.ground.num_states)
    shaped = shaped_block_rewards(problem.block, values)
    relaxed = solve_lp(LinearProgram(shaped.ravel(), lp.eq_matrix, lp.eq_rhs,
                                     np.zeros((0, lp.num_variables)), np.zeros(0)))
    assert relaxed.objective == pytest.approx(solution.objective + solution.ge_duals @ lp.ge_rhs, abs=1e-8)
