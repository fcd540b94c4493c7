"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with its measurement before
asserting, so ``pytest tests/test_acceptance.py`` (or running this file as a
script) gives a one-screen verdict.
"""

import itertools
import json
import math
import sys
import time

import numpy as np
import pytest

from scenario_scuc.case import bundled_case_path, load_case
from scenario_scuc.checks import (case3_oracle, check_lp_oracle, check_milp_oracle,
                                  exact_sample_complexity, risk_monotonicity_violations, structural_batch)
from scenario_scuc.cli import main as cli_main
from scenario_scuc.reduction import (Degeneracy, SetKind, irreducible_set, is_degenerate,
                                     subset_objectives, support_set_by_removal,
                                     two_stage_essential)
from scenario_scuc.stochastic import DistributionSpec, ExperimentConfig, run_experiment
from scenario_scuc.theory import ComplexityQuery, sample_complexity_convex


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail, seconds, limit=None):
        timed = seconds <= limit if limit is not None else True
        status = "PASS" if ok and timed else "FAIL"
        budget = f" (limit {limit:g} s)" if limit is not None else ""
        with capsys.disabled():
            print(f"\n{status} criterion {number}: {title}: {detail}; {seconds:.1f} s{budget}")
        return ok and timed
    return emit


def inversions(values, increasing):
    pairs = zip(values, values[1:])
    return sum(1 for a, b in pairs if (b < a if increasing else b > a))


def test_three_bus_degeneracy(verdict):
    t0 = time.perf_counter()
    o = case3_oracle()
    table = subset_objectives(o)
    full = frozenset({1, 2, 3})
    support = support_set_by_removal(o).indices
    lower = o.less(o.solve({1}).objective, o.solve(full).objective)
    degenerate = is_degenerate(o)
    ts = two_stage_essential(o)
    found = {irreducible_set(o, list(p)).indices for p in itertools.permutations(full)}
    brute_irr = set(table.irreducible_sets())
    ok = (support == {1} and table.support_set() == {1} and lower
          and degenerate is Degeneracy.DEGENERATE
          and ts.kind is SetKind.IRREDUCIBLE and ts.degenerate is Degeneracy.DEGENERATE
          and all(1 in s for s in found) and found <= brute_irr and ts.indices in brute_irr
          and [len(e) for e in table.essential_sets()] == [2, 2])
    detail = (f"support {sorted(support)}, opt(SP({{1}}))={o.solve({1}).objective:g} < "
              f"opt(SP(N))={o.solve(full).objective:g}, {degenerate.value}, fallback "
              f"{sorted(ts.indices)}, irreducible over all orders {sorted(map(sorted, found))}")
    assert verdict(1, "3-bus degeneracy", ok, detail, time.perf_counter() - t0, 5)


def test_risk_function_monotonicity(verdict):
    t0 = time.perf_counter()
    bad = risk_monotonicity_violations(n_max=500, betas=(1e-6, 1e-3, 0.1, 0.5))
    detail = f"{len(bad)} violations on N=2..500, all k, 4 beta values"
    assert verdict(2, "risk function monotonicity", not bad, detail, time.perf_counter() - t0, 60)


def test_sample_complexity(verdict):
    t0 = time.perf_counter()
    n90 = sample_complexity_convex(ComplexityQuery(0.05, 0.01, 1))
    closed = math.ceil(math.log(0.01) / math.log(1 - 0.05))
    mismatches = []
    for eps, beta in ((0.05, 0.01), (0.1, 1e-3), (0.2, 0.05)):
        for h in range(1, 11):
            got = sample_complexity_convex(ComplexityQuery(eps, beta, h))
            ref = exact_sample_complexity(eps, beta, h, n_max=2000)
            if ref is None or got != ref:
                mismatches.append((eps, beta, h, got, ref))
    ok = n90 == 90 == closed and not mismatches
    detail = f"N(0.05, 0.01, 1)={n90} (closed form {closed}), {len(mismatches)} mismatches for h<=10"
    assert verdict(3, "sample complexity", ok, detail, time.perf_counter() - t0, 30)


def test_structural_relations(verdict):
    t0 = time.perf_counter()
    res = structural_batch(count=100, seed=0, max_n=8)
    odd = res.notes["unique_essential_but_degenerate"]
    ok = res.passed and res.checked >= 100 and odd == 0
    detail = (f"{res.checked} instances (LP and MILP, N<=8), {len(res.failures)} relation "
              f"failures, {res.notes['degenerate_instances']} degenerate, "
              f"{odd} with a unique essential set while degenerate")
    if res.failures:
        detail += f"; first: {res.failures[0]}"
    assert verdict(4, "structural relations", ok, detail, time.perf_counter() - t0, 600)


def test_certificate_validity(verdict):
    t0 = time.perf_counter()
    case = load_case(bundled_case_path("case3.json"))
    cfg = ExperimentConfig(case=case, spec=DistributionSpec(), n_grid=(20, 50, 100), trials=100,
                           beta=0.01, m_oos=100_000, seed=2024)
    report = run_experiment(cfg)
    limit = 0.01 + 3 * math.sqrt(0.01 / 100)
    rates, ok = {}, not report.failed
    for n in cfg.n_grid:
        rows = [r for r in report.rows if r.n_scenarios == n and r.ok]
        rates[n] = sum(r.exceeds_certificate for r in rows) / max(len(rows), 1)
        ok &= len(rows) == cfg.trials and rates[n] <= limit
    detail = (f"exceedance rate per N {rates} (limit {limit:.3f}), "
              f"{len(report.failed)} failed trials")
    assert verdict(5, "certificate validity", ok, detail, time.perf_counter() - t0, 1800)


def test_tradeoff_direction(verdict):
    t0 = time.perf_counter()
    case = load_case(bundled_case_path("case3.json"))
    cfg = ExperimentConfig(case=case, spec=DistributionSpec(), n_grid=(5, 10, 20, 50, 100),
                           trials=10, beta=0.01, m_oos=100_000, seed=77)
    report = run_experiment(cfg)
    eps = report.mean_by_n("epsilon_hat")
    cost = report.mean_by_n("objective")
    inv_eps, inv_cost = inversions(eps, increasing=False), inversions(cost, increasing=True)
    ok = not report.failed and inv_eps <= 1 and inv_cost <= 1
    detail = (f"mean eps_hat {[round(v, 4) for v in eps]} ({inv_eps} inversions), "
              f"mean cost {[round(v, 2) for v in cost]} ({inv_cost} inversions)")
    assert verdict(6, "trade-off direction", ok, detail, time.perf_counter() - t0)


def test_solver_oracles(verdict):
    t0 = time.perf_counter()
    lp = check_lp_oracle(count=200, seed=0, rtol=1e-7)
    milp = check_milp_oracle(count=100, seed=0, rtol=1e-7)
    ok = lp.passed and milp.passed
    detail = (f"LP {lp.checked} checks with {len(lp.failures)} failures, "
              f"MILP {milp.checked} checks with {len(milp.failures)} failures")
    assert verdict(7, "solver oracles", ok, detail, time.perf_counter() - t0, 300)


def test_experiment_determinism(verdict, tmp_path, capsys):
    t0 = time.perf_counter()
    cfg = {"case": "case3.json", "distribution": {"kind": "parametric"},
           "n_grid": [5, 10], "trials": 3, "m_oos": 20_000, "seed": 11}
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    first, second = tmp_path / "first", tmp_path / "second"
    codes = [cli_main(["experiment", str(path), "--out-dir", str(first)]),
             cli_main(["experiment", "--from-manifest", str(first / "manifest.json"),
                       "--out-dir", str(second)])]
    capsys.readouterr()
    a, b = (first / "results.csv").read_bytes(), (second / "results.csv").read_bytes()
    ok = codes == [0, 0] and a == b
    detail = f"exit codes {codes}, CSV {len(a)} bytes, identical={a == b}"
    assert verdict(8, "experiment determinism", ok, detail, time.perf_counter() - t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
