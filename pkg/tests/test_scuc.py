import json

import numpy as np
import pytest

from scenario_scuc.case import (CaseParseError, Contingency, DisconnectedNetwork, Generator,
                                GridCase, Injection, InvalidCase, Line, SingularSusceptanceMatrix,
                                build_ptdf, bundled_case_path, case_from_dict, case_to_dict,
                                load_case, parse_json, save_case, validate_case)
from scenario_scuc.lp import solve_lp
from scenario_scuc.milp import solve_milp
from scenario_scuc.reduction import ScenarioProblemOracle
from scenario_scuc.scuc import (DimensionMismatch, FirstStageInfeasible, UcSolution,
                                batch_violations, build_dscuc, build_model, build_sscuc,
                                check_solution_feasible, fix_first_stage)
from scenario_scuc.stochastic import ScenarioRealization, ScenarioSet
from scenario_scuc.synthetic import synthetic_case


def gen(bus, lo=0.0, hi=100.0, cost=1.0, **kw):
    return Generator(bus=bus, g_min=lo, g_max=hi, cost=cost, **kw)


def two_bus_case(**kw):
    base = dict(buses=(1, 2), lines=(Line(1, 2, 0.5, 50.0),), generators=(gen(1),),
                wind_farms=(), loads=(Injection(2, (40.0,)),), horizon=1, slack_bus=2)
    base.update(kw)
    return GridCase(**base)


def zero_scenarios(case, n):
    return ScenarioSet(np.zeros((n, case.horizon, len(case.wind_farms))),
                       np.zeros((n, case.horizon, len(case.loads))), 0, "zeros")


# --- shift factors -------------------------------------------------------------------------------

def test_three_bus_shift_factors(case3):
    p = build_ptdf(case3)
    # lines 1-2, 1-3, 2-3; the direct path carries twice the two-hop path
    assert p.bus[:, 0] == pytest.approx([1 / 3, 2 / 3, 1 / 3])
    assert p.bus[:, 1] == pytest.approx([-1 / 3, 1 / 3, 2 / 3])
    assert p.bus[:, 2] == pytest.approx([0, 0, 0])


def test_two_bus_shift_factors():
    p = build_ptdf(two_bus_case())
    assert p.bus == pytest.approx(np.array([[1.0, 0.0]]))
    p = build_ptdf(two_bus_case(slack_bus=1))
    assert p.bus == pytest.approx(np.array([[0.0, -1.0]]))


def test_flows_conserve_at_every_bus():
    case = synthetic_case(n_bus=14, n_gen=5, n_lines=20, horizon=2, seed=3)
    p = build_ptdf(case)
    rng = np.random.default_rng(0)
    inj = rng.normal(size=len(case.buses))
    s = case.buses.index(case.slack_bus)
    inj[s] = -(inj.sum() - inj[s])
    flow = p.bus @ inj
    out = np.zeros(len(case.buses))
    for ln, f in zip(case.lines, flow):
        out[case.buses.index(ln.from_bus)] += f
        out[case.buses.index(ln.to_bus)] -= f
    assert out == pytest.approx(inj, abs=1e-9)


def test_bad_networks():
    with pytest.raises(DisconnectedNetwork):
        build_ptdf(GridCase(buses=(1, 2, 3), lines=(Line(1, 2, 1.0, 10.0),), generators=(gen(1),),
                            wind_farms=(), loads=(), horizon=1, slack_bus=1))
    with pytest.raises(SingularSusceptanceMatrix):
        build_ptdf(GridCase(buses=(1, 2, 3), lines=(Line(1, 2, 1.0, 10.0), Line(2, 3, 1e15, 10.0)),
                            generators=(gen(1),), wind_farms=(), loads=(), horizon=1, slack_bus=1))


# --- model build --------------------------------------------------------------------------------

def test_three_bus_model_shape(case3):
    model = build_model(case3)
    lp = model.mip.relaxation
    assert lp.n_vars == 4 and len(model.mip.binary_mask) == 2
    families = {tag[0] for tag in lp.groups}
    assert {"balance", "line", "gencap"} <= families
    assert not families & {"ramp", "contingency", "startup", "shutdown", "minon", "minoff"}


def test_three_bus_deterministic_optimum(case3):
    # forecast only: net load 80 is served by the cheap unit alone
    sol = solve_milp(build_dscuc(case3))
    assert sol.objective == pytest.approx(80.0)


def test_model_families_follow_case_data(case6):
    model = build_model(case6, zero_scenarios(case6, 2))
    families = {tag[0] for tag in model.mip.relaxation.groups}
    assert {"ramp", "contingency", "startup", "minon", "resgencap", "scenario"} <= families
    L = model.layout
    assert L.g.shape == (case6.horizon, case6.n_k + 1, case6.n_g)
    assert np.all(L.u >= 0)
    labels = model.program.row_scenario
    assert set(np.unique(labels)) == {0, 1, 2}


def test_single_generator_meets_load():
    case = two_bus_case()
    sol = solve_milp(build_dscuc(case))
    assert sol.objective == pytest.approx(40.0)


def test_synthetic_large_case_builds():
    case = load_case(bundled_case_path("case118_synthetic.json"))
    assert case == synthetic_case()
    model = build_model(case)
    assert model.layout.z.shape == (24, 54)
    assert len(model.mip.binary_mask) >= 24 * 54


def test_zero_error_scenarios_keep_deterministic_optimum(case6):
    det = solve_milp(build_dscuc(case6)).objective
    o = build_sscuc(case6, zero_scenarios(case6, 3))
    assert o.solve(o.program.scenarios).objective == pytest.approx(det, rel=1e-9)


def test_more_scenarios_never_cheaper(case3, table3):
    o = build_sscuc(case3, table3)
    objs = [o.solve(range(1, k + 1)).objective for k in range(4)]
    assert objs == sorted(objs)
    assert objs[-1] == pytest.approx(2065.0)


# --- fixed first stage ---------------------------------------------------------------------------

def test_fixed_schedule_second_stage(case3):
    prog = fix_first_stage(case3, None, z=[[1, 1]])
    assert solve_lp(prog.mip.relaxation).objective == pytest.approx(2060.0)
    off = fix_first_stage(case3, None, z=[[0, 0]])
    assert not solve_lp(off.mip.relaxation).optimal
    with pytest.raises(DimensionMismatch):
        fix_first_stage(case3, None, z=[[1, 1, 1]])
    with pytest.raises(FirstStageInfeasible):
        fix_first_stage(case3, None, z=[[1, 0.5]])


def test_min_up_rows_reject_short_runs(case6):
    z = np.ones((case6.horizon, case6.n_g), int)
    z[1, 0] = 0  # switch unit 1 off for one step
    if case6.generators[0].min_off > 1 or case6.generators[0].min_on > 1:
        with pytest.raises(FirstStageInfeasible):
            fix_first_stage(case6, None, z)
    fix_first_stage(case6, None, np.ones((case6.horizon, case6.n_g), int))


# --- out-of-sample checks ------------------------------------------------------------------------

def test_realization_checks_for_three_bus(case3, table3):
    o = build_sscuc(case3, table3)
    sol = o.uc_solution(o.solve({1}))
    assert sol.objective == pytest.approx(85.0)
    ok = check_solution_feasible(case3, sol, ScenarioRealization(np.array([[6.0]]), np.array([[11.0]])))
    assert not ok.violated
    bad = check_solution_feasible(case3, sol, ScenarioRealization(np.array([[-25.0]]), np.array([[-35.0]])))
    assert bad.line_violated and not bad.balance_violated
    assert bad.worst_line == pytest.approx(20 / 3)
    short = check_solution_feasible(case3, sol, ScenarioRealization(np.array([[0.0]]), np.array([[30.0]])))
    assert short.balance_violated


def test_full_solution_satisfies_its_scenarios(case3, table3):
    o = build_sscuc(case3, table3)
    sol = o.uc_solution(o.solve({1, 2, 3}))
    res = batch_violations(case3, sol, table3.wind, table3.load)
    assert not res.any.any()


def test_dimension_checks(case3):
    sol = UcSolution(np.zeros((1, 2), int), np.zeros((1, 2), int), np.zeros((1, 2), int),
                     np.zeros((1, 1, 3)), np.zeros((1, 2)), 0.0)
    with pytest.raises(DimensionMismatch):
        batch_violations(case3, sol, np.zeros((1, 1, 1)), np.zeros((1, 1, 1)))


def test_solution_json_round_trip(case3, table3):
    o = build_sscuc(case3, table3)
    sol = o.uc_solution(o.solve({1, 2, 3}))
    back = UcSolution.from_dict(json.loads(json.dumps(sol.to_dict())))
    assert back.objective == sol.objective
    assert np.array_equal(back.z, sol.z) and np.array_equal(back.g, sol.g)


# --- case files ----------------------------------------------------------------------------------

def test_case_round_trip(tmp_path, case6):
    path = tmp_path / "c.json"
    save_case(case6, path)
    assert load_case(path) == case6
    assert case_from_dict(case_to_dict(case6)) == case6


def test_parse_error_reports_position():
    with pytest.raises(CaseParseError) as info:
        parse_json('{"a": 1,\n  "b": }')
    assert info.value.line == 2 and info.value.column > 0


@pytest.mark.parametrize("change", [
    dict(slack_bus=9),
    dict(lines=(Line(1, 1, 1.0, 10.0),)),
    dict(lines=(Line(1, 2, 0.0, 10.0),)),
    dict(generators=(gen(1, lo=50.0, hi=10.0),)),
    dict(loads=(Injection(2, (1.0, 2.0)),)),
    dict(contingencies=(Contingency((0, 1), 0.0),)),
    dict(generators=(gen(1), gen(2, initial_on=1, initial_output=0.0))),
])
def test_invalid_cases_rejected(change):
    with pytest.raises(InvalidCase):
        validate_case(two_bus_case(**change))


def test_unknown_field_rejected(case3):
    d = case_to_dict(case3)
    d["lines"][0]["colour"] = "red"
    with pytest.raises(InvalidCase):
        case_from_dict(d)
