import math

import numpy as np
import pytest

from scenario_scuc.checks import check_milp_oracle
from scenario_scuc.instances import random_milp
from scenario_scuc.lp import LinearProgram, LpBuilder, MalformedProblem, solve_lp
from scenario_scuc.milp import (BranchRule, MilpOptions, MilpStatus, MixedIntegerProgram,
                                NodeLimitExceeded, binary_enumeration_oracle, objectives_equal,
                                solve_milp, strictly_less)


def knapsack(values, weights, cap):
    """max sum v x s.t. sum w x <= cap, written as a minimisation."""
    b = LpBuilder()
    xs = [b.add_var(f"x{j}", 0, 1, -v, binary=True) for j, v in enumerate(values)]
    b.add_row(dict(zip(xs, weights)), "<=", cap)
    return MixedIntegerProgram(b.build(), frozenset(b.binary))


def test_three_bus_full_scenario_problem(oracle3):
    sol = oracle3.solve(oracle3.program.scenarios)
    assert sol.objective == pytest.approx(2065.0)
    assert oracle3.solve({1}).objective == pytest.approx(85.0)
    ref = binary_enumeration_oracle(oracle3.program.restrict({1, 2, 3}))
    assert ref.objective == pytest.approx(2065.0)


def test_empty_binary_mask_matches_lp():
    lp = LinearProgram([1.0, 2.0], [[1.0, 1.0]], [">="], [1.5], [0, 0], [1, 1])
    assert solve_milp(MixedIntegerProgram(lp)).objective == pytest.approx(solve_lp(lp).objective)


def test_knapsack_against_enumeration():
    mip = knapsack([10, 13, 7, 8, 4], [5, 7, 4, 4, 2], 10)
    sol = solve_milp(mip)
    assert sol.optimal and sol.objective == pytest.approx(-19.0)
    assert binary_enumeration_oracle(mip).objective == pytest.approx(sol.objective)
    for rule in BranchRule:
        assert solve_milp(mip, MilpOptions(branch_rule=rule)).objective == pytest.approx(-19.0)


def test_binaries_fixed_by_bounds():
    lp = LinearProgram([-1.0, -1.0], np.zeros((0, 2)), [], [], [1, 0], [1, 0])
    mip = MixedIntegerProgram(lp, frozenset({0, 1}))
    assert solve_milp(mip).objective == pytest.approx(-1.0)
    assert binary_enumeration_oracle(mip).node_count == 1


def test_integer_infeasible():
    # 0.3 <= y <= 0.7 has no binary point although the relaxation is feasible
    lp = LinearProgram([1.0], [[1.0], [1.0]], [">=", "<="], [0.3, 0.7], [0], [1])
    mip = MixedIntegerProgram(lp, frozenset({0}))
    assert solve_milp(mip).status is MilpStatus.INFEASIBLE
    assert binary_enumeration_oracle(mip).status is MilpStatus.INFEASIBLE


def test_binary_bounds_validated():
    lp = LinearProgram([1.0], np.zeros((0, 1)), [], [], [0], [2])
    with pytest.raises(MalformedProblem):
        MixedIntegerProgram(lp, frozenset({0}))


def test_warm_start_caps_objective_and_infeasible_warm_start_ignored():
    mip = knapsack([10, 13, 7, 8, 4], [5, 7, 4, 4, 2], 10)
    good = solve_milp(mip, MilpOptions(warm_start=np.array([1, 0, 0, 1, 0.0])))
    assert good.warm_start_used and good.objective == pytest.approx(-19.0)
    bad = solve_milp(mip, MilpOptions(warm_start=np.ones(5)))
    assert not bad.warm_start_used and bad.objective == pytest.approx(-19.0)


def test_node_limit_returns_incumbent_or_raises():
    mip = knapsack(list(range(3, 15)), list(range(2, 14)), 31.5)
    with pytest.raises(NodeLimitExceeded):
        solve_milp(mip, MilpOptions(node_limit=1))
    ws = np.zeros(12)
    sol = solve_milp(mip, MilpOptions(node_limit=2, warm_start=ws))
    assert sol.status is MilpStatus.NODE_LIMIT and sol.objective <= 0.0
    assert sol.bound <= sol.objective


def test_deterministic_result():
    rng = np.random.default_rng(5)
    mip = random_milp(rng, n_bin=8, n_cont=4)
    a, b = solve_milp(mip), solve_milp(mip)
    assert a.status == b.status and a.node_count == b.node_count
    if a.feasible:
        assert np.array_equal(a.primal, b.primal)


def test_objective_comparisons():
    assert objectives_equal(1000.0, 1000.0 + 5e-4)
    assert not objectives_equal(1000.0, 1000.01)
    assert strictly_less(1.0, 1.01) and not strictly_less(1.0, 1.0 + 1e-7)
    assert objectives_equal(math.inf, math.inf) and strictly_less(5.0, math.inf)


def test_oracle_equivalence_on_random_milps():
    res = check_milp_oracle(count=100, seed=3)
    assert res.passed, res.failures[:3]


def test_monotone_in_rows_with_warm_start():
    rng = np.random.default_rng(11)
    for _ in range(30):
        mip = random_milp(rng)
        full = solve_milp(mip)
        if not full.feasible:
            continue
        lp = mip.relaxation
        keep = np.ones(lp.n_rows, bool)
        keep[0] = False
        sub = MixedIntegerProgram(lp.select_rows(keep), mip.binary_mask)
        part = solve_milp(sub, MilpOptions(warm_start=full.primal))
        assert part.objective <= full.objective
