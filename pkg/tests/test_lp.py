import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from scenario_scuc.checks import check_lp_oracle
from scenario_scuc.instances import random_lp
from scenario_scuc.lp import (INF, LinearProgram, LpBuilder, LpStatus, MalformedProblem, Sense,
                              TooLarge, dual_objective, solve_lp, strictly_feasible, vertex_oracle)


def three_bus_second_stage():
    """z = (1, 1), forecast only: variables g1, g2."""
    b = LpBuilder()
    g1 = b.add_var("g1", 20, 100, 1.0)
    g2 = b.add_var("g2", 20, 90, 100.0)
    b.add_row({g1: 1, g2: 1}, ">=", 80, "balance")
    # flow on line 1-2 is (g1 - g2 - 30) / 3
    b.add_row({g1: 1 / 3, g2: -1 / 3}, "<=", 20 + 10, "line_max")
    b.add_row({g1: 1 / 3, g2: -1 / 3}, ">=", -20 + 10, "line_min")
    return b.build()


def test_three_bus_second_stage():
    sol = solve_lp(three_bus_second_stage())
    assert sol.status is LpStatus.OPTIMAL
    assert sol.primal == pytest.approx([60, 20])
    assert sol.objective == pytest.approx(2060)
    ref = vertex_oracle(three_bus_second_stage())
    assert ref.objective == pytest.approx(sol.objective, rel=1e-9)


def test_bound_only_minimum_and_sign_flip():
    lp = LinearProgram([1.0], np.zeros((0, 1)), [], [], [0.0], [5.0])
    sol = solve_lp(lp)
    assert sol.primal == pytest.approx([0.0]) and sol.objective == 0.0
    neg = LinearProgram([-1.0], np.zeros((0, 1)), [], [], [0.0], [5.0])
    sol = solve_lp(neg)
    assert sol.primal == pytest.approx([5.0]) and sol.objective == pytest.approx(-5.0)


def test_infeasible_box():
    lp = LinearProgram([1.0], [[1.0], [1.0]], [">=", "<="], [1.0, 0.0])
    assert solve_lp(lp).status is LpStatus.INFEASIBLE
    assert vertex_oracle(LinearProgram([1.0], [[1.0], [1.0]], [">=", "<="], [1.0, 0.0],
                                       [-10.0], [10.0])).status is LpStatus.INFEASIBLE


def test_degenerate_objective_with_two_optimal_vertices():
    # min x + y  s.t. x + y >= 1 on the unit box: the whole edge is optimal
    lp = LinearProgram([1.0, 1.0], [[1.0, 1.0]], [">="], [1.0], [0, 0], [1, 1])
    sol, ref = solve_lp(lp), vertex_oracle(lp)
    assert sol.objective == pytest.approx(1.0) and ref.objective == pytest.approx(1.0)
    assert lp.is_feasible(sol.primal)


def test_unbounded_returns_ray():
    lp = LinearProgram([-1.0, 0.0], [[1.0, -1.0]], ["<="], [1.0], [0, 0], [INF, INF])
    sol = solve_lp(lp)
    assert sol.status is LpStatus.UNBOUNDED
    ray = sol.ray
    assert lp.objective @ ray < 0
    assert np.all(lp.matrix @ ray <= 1e-12) and np.all(ray >= -1e-12)


def test_equality_rows_and_free_variables():
    # min x subject to x - y = 2, y >= -3 with x free
    lp = LinearProgram([1.0, 0.0], [[1.0, -1.0]], ["="], [2.0], [-INF, -3.0], [INF, INF])
    sol = solve_lp(lp)
    assert sol.objective == pytest.approx(-1.0)
    assert sol.duals.shape == (1,)


def test_dual_sign_convention_and_complementary_slackness():
    lp = three_bus_second_stage()
    sol = solve_lp(lp)
    # balance row binds: raising its right-hand side raises the cost by 1 per MW
    assert sol.duals[0] == pytest.approx(1.0)
    for i, s in enumerate(lp.senses):
        if s is Sense.GE:
            assert sol.duals[i] >= -1e-9
        elif s is Sense.LE:
            assert sol.duals[i] <= 1e-9
    slack = lp.matrix @ sol.primal - lp.rhs
    assert np.all(np.abs(slack * sol.duals) <= 1e-7)
    assert dual_objective(lp, sol) == pytest.approx(sol.objective, rel=1e-9)


def test_empty_rows_are_presolved():
    lp = LinearProgram([1.0], [[0.0], [1.0]], ["<=", ">="], [1.0, 2.0], [0.0], [5.0])
    sol = solve_lp(lp)
    assert sol.objective == pytest.approx(2.0) and sol.duals.shape == (2,)
    bad = LinearProgram([1.0], [[0.0]], [">="], [1.0], [0.0], [5.0])
    assert solve_lp(bad).status is LpStatus.INFEASIBLE


def test_malformed_problems_rejected():
    with pytest.raises(MalformedProblem):
        LinearProgram([1.0, 2.0], [[1.0]], ["<="], [1.0])
    with pytest.raises(MalformedProblem):
        LinearProgram([1.0], [[1.0]], ["<="], [1.0], [2.0], [1.0])
    with pytest.raises(MalformedProblem):
        LinearProgram([1.0], [[1.0]], ["<=", ">="], [1.0])


def test_problem_is_immutable():
    lp = three_bus_second_stage()
    with pytest.raises(ValueError):
        lp.objective[0] = 5.0


def test_vertex_oracle_size_cap():
    n = 13
    lp = LinearProgram(np.ones(n), sp.csr_matrix((0, n)), [], [], np.zeros(n), np.ones(n))
    with pytest.raises(TooLarge):
        vertex_oracle(lp)


def test_strict_feasibility_probe():
    lp = LinearProgram([1.0], [[1.0], [1.0]], [">=", "<="], [0.0, 1.0], [-5.0], [5.0])
    ok, margin = strictly_feasible(lp)
    assert ok and margin > 0
    flat = LinearProgram([1.0], [[1.0], [1.0]], [">=", "<="], [1.0, 1.0], [-5.0], [5.0])
    assert not strictly_feasible(flat)[0]


def test_oracle_equivalence_on_random_lps():
    res = check_lp_oracle(count=200, seed=1)
    assert res.passed, res.failures[:3]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_strong_duality_and_row_deletion(seed):
    rng = np.random.default_rng(seed)
    lp = random_lp(rng, n_vars=int(rng.integers(1, 7)), integer_data=bool(seed % 2))
    sol = solve_lp(lp)
    assert sol.status is LpStatus.OPTIMAL  # feasible and boxed by construction
    assert lp.is_feasible(sol.primal)
    assert abs(sol.objective - lp.objective @ sol.primal) <= 1e-9 * (1 + abs(sol.objective))
    assert abs(sol.objective - dual_objective(lp, sol)) <= 1e-7 * (1 + abs(sol.objective))
    for r in range(lp.n_rows):
        keep = np.ones(lp.n_rows, bool)
        keep[r] = False
        assert solve_lp(lp.select_rows(keep)).objective <= sol.objective + 1e-9 * (1 + abs(sol.objective))
