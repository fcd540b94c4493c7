"""Cross-validation suites shared by ``oracle-check`` and the test-suite.

Each suite returns a :class:`SuiteResult`; the first diverging instance is
kept for diagnostics.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from types import SimpleNamespace

import numpy as np

from .case import GridCase, bundled_case_path, load_case
from .lp import LpStatus, dual_objective, solve_lp, vertex_oracle
from .milp import MilpStatus, binary_enumeration_oracle, solve_milp
from .instances import random_lp, random_milp, random_scenario_lp, random_two_stage
from .reduction import (Degeneracy, PreconditionWarning, ScenarioProblemOracle, SetKind,
                        SubsetTable,
                        irreducible_set, is_degenerate, subset_objectives,
                        support_set_by_removal, support_set_via_duals, two_stage_essential)
from .scuc import build_sscuc
from .theory import ComplexityQuery, binomial_tail, epsilon_posterior, sample_complexity_convex

SUITES = ("lp", "milp", "sets", "theory")
MONOTONICITY_BETAS = (1e-6, 1e-3, 0.1, 0.5)


class UnknownSuite(ValueError):
    pass


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, msg: str) -> None:
        self.failures.append(msg)

    def summary(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        out = f"{self.name}: {state} ({self.checked} checks, {len(self.failures)} failures)"
        if self.failures:
            out += f"\n  first failure: {self.failures[0]}"
        return out


def rel_close(a: float, b: float, rtol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= rtol * (1.0 + abs(b))


# --------------------------------------------------------------------------
# Solvers
# --------------------------------------------------------------------------


def check_lp_oracle(count: int = 200, seed: int = 0, rtol: float = 1e-7) -> SuiteResult:
    """solve_lp against vertex enumeration, plus strong duality and
    monotonicity under row deletion."""
    res = SuiteResult("lp")
    rng = np.random.default_rng(seed)
    for trial in range(count):
        lp = random_lp(rng, n_vars=int(rng.integers(1, 9)), integer_data=bool(trial % 2))
        got, ref = solve_lp(lp), vertex_oracle(lp)
        res.checked += 1
        if got.status is not ref.status or (got.optimal and not rel_close(got.objective, ref.objective, rtol)):
            res.fail(f"instance {trial}: solve_lp {got.status.value} {got.objective!r} "
                     f"vs vertex {ref.status.value} {ref.objective!r}")
            continue
        if got.optimal:
            if not lp.is_feasible(got.primal):
                res.fail(f"instance {trial}: primal infeasible")
            if abs(got.objective - dual_objective(lp, got)) > 1e-7 * (1 + abs(got.objective)):
                res.fail(f"instance {trial}: duality gap {got.objective - dual_objective(lp, got)!r}")
            if lp.n_rows:
                keep = np.ones(lp.n_rows, bool)
                keep[int(rng.integers(lp.n_rows))] = False
                sub = solve_lp(lp.select_rows(keep))
                if not sub.optimal or sub.objective > got.objective + 1e-9 * (1 + abs(got.objective)):
                    res.fail(f"instance {trial}: deleting a row raised the optimum")
    return res


def check_milp_oracle(count: int = 100, seed: int = 0, rtol: float = 1e-7) -> SuiteResult:
    """solve_milp against binary enumeration."""
    res = SuiteResult("milp")
    rng = np.random.default_rng(seed)
    for trial in range(count):
        mip = random_milp(rng)
        got, ref = solve_milp(mip), binary_enumeration_oracle(mip)
        res.checked += 1
        if got.status is not ref.status or (got.optimal and not rel_close(got.objective, ref.objective, rtol)):
            res.fail(f"instance {trial}: solve_milp {got.status.value} {got.objective!r} "
                     f"vs enumeration {ref.status.value} {ref.objective!r}")
        elif got.optimal and not mip.is_feasible(got.primal):
            res.fail(f"instance {trial}: incumbent infeasible")
    return res


# --------------------------------------------------------------------------
# Scenario sets
# --------------------------------------------------------------------------


def table_scenarios(case: GridCase):
    tab = case.scenario_table
    return SimpleNamespace(wind=np.asarray(tab["wind"], float), load=np.asarray(tab["load"], float))


def case3_oracle(capacity: float | None = None) -> ScenarioProblemOracle:
    case = load_case(bundled_case_path("case3.json"))
    if capacity is not None:
        case = case.replace(lines=tuple(type(ln)(ln.from_bus, ln.to_bus, ln.reactance, capacity)
                                        for ln in case.lines))
    return build_sscuc(case, table_scenarios(case))


def structural_violations(oracle: ScenarioProblemOracle, rng: np.random.Generator,
                          n_orders: int = 20, two_stage: bool = True) -> tuple[list[str], dict]:
    """Check the set-theoretic relations of one scenario problem against
    the full subset table.  Returns messages for every violated relation."""
    with warnings.catch_warnings():
        # the dual-screening precondition is read from the result instead
        warnings.simplefilter("ignore", PreconditionWarning)
        return _structural_violations(oracle, rng, n_orders, two_stage)


def _structural_violations(oracle, rng, n_orders, two_stage):
    bad: list[str] = []
    table = subset_objectives(oracle)
    n = table.n
    full = table.full
    S = table.support_set()
    essential = table.essential_sets()
    irreducible = table.irreducible_sets()
    degenerate = table.degeneracy()
    info = {"support": sorted(S), "essential": [sorted(e) for e in essential],
            "degenerate": degenerate.value}

    if table.monotonicity_violations():
        bad.append("monotonicity: a subset has a larger optimum than its superset")

    # support set by removal agrees with the table
    sup = support_set_by_removal(oracle)
    if sup.indices != S:
        bad.append(f"support by removal {sorted(sup.indices)} != table {sorted(S)}")
    if is_degenerate(oracle) is not degenerate:
        bad.append("is_degenerate disagrees with the subset table")

    # every invariant set found contains the support set
    for inv in table.invariant_sets():
        if not S <= inv:
            bad.append(f"invariant set {sorted(inv)} misses support {sorted(S)}")
            break

    # irreducible sets from sampled removal orders
    orders = [list(range(n, 0, -1))]
    orders += [list(rng.permutation(np.arange(1, n + 1))) for _ in range(n_orders - 1)]
    found = set()
    for order in orders:
        r = irreducible_set(oracle, [int(i) for i in order])
        found.add(r.indices)
        if r.indices not in irreducible:
            bad.append(f"algorithm returned non-irreducible set {sorted(r.indices)}")
        if not S <= r.indices:
            bad.append(f"irreducible {sorted(r.indices)} misses support {sorted(S)}")

    # removing a non-support scenario keeps every support scenario
    for k in full - S:
        sub = table.support_set(full - {k})
        if not S <= sub:
            bad.append(f"removing non-support {k}: support {sorted(sub)} misses {sorted(S - sub)}")

    non_deg = degenerate is Degeneracy.NON_DEGENERATE
    if non_deg:
        if essential != [S]:
            bad.append(f"non-degenerate but essential sets {[sorted(e) for e in essential]} != [{sorted(S)}]")
        if found != {S}:
            bad.append("non-degenerate but some removal order gave another irreducible set")

    unique_irr = len(found) == 1 and len(irreducible) == 1
    unique_ess = len(essential) == 1
    info.update(unique_irreducible=unique_irr, unique_essential=unique_ess,
                unique_essential_but_degenerate=unique_ess and not non_deg)
    if non_deg != unique_irr:
        bad.append(f"non-degenerate={non_deg} but unique irreducible={unique_irr}")
    # a unique essential set does not imply non-degeneracy, so only one direction is checked
    if non_deg and not unique_ess:
        bad.append("non-degenerate but the essential set is not unique")

    if oracle.program.is_convex and oracle.program.n_scenarios:
        duals = support_set_via_duals(oracle.program)
        if duals.precondition_ok and not S <= duals.candidates:
            bad.append(f"dual candidates {sorted(duals.candidates)} miss support {sorted(S)}")
        if non_deg and duals.indices != S:
            bad.append(f"dual-screened support {sorted(duals.indices)} != {sorted(S)}")

    if two_stage:
        ts = two_stage_essential(oracle)
        info["two_stage"] = ts.kind.value
        if ts.second_stage_support is not None and not ts.second_stage_support <= S:
            bad.append(f"second-stage support {sorted(ts.second_stage_support)} not within {sorted(S)}")
        if ts.degenerate is not degenerate:
            bad.append(f"two-stage label {ts.degenerate.value} != table {degenerate.value}")
        if ts.kind is SetKind.ESSENTIAL and ts.indices not in essential:
            bad.append(f"two-stage essential {sorted(ts.indices)} is not a minimal invariant set")
        if ts.kind is SetKind.IRREDUCIBLE and ts.indices not in irreducible:
            bad.append(f"two-stage fallback {sorted(ts.indices)} is not irreducible")
        s_hat = ts.second_stage_support
        if s_hat is not None and table.is_invariant(s_hat) and essential != [s_hat]:
            bad.append(f"invariant second-stage support {sorted(s_hat)} is not the unique essential set")
    return bad, info


def structural_batch(count: int = 100, seed: int = 0, max_n: int = 8) -> SuiteResult:
    """Alternate convex and two-stage random instances with ``N <= max_n``."""
    res = SuiteResult("sets")
    rng = np.random.default_rng(seed)
    degenerate = odd = 0
    for trial in range(count):
        n = int(rng.integers(1, max_n + 1))
        if trial % 2 == 0:
            program = random_scenario_lp(rng, n)
        else:
            program = random_two_stage(rng, n)
        oracle = ScenarioProblemOracle(program)
        bad, info = structural_violations(oracle, rng)
        res.checked += 1
        degenerate += info["degenerate"] == Degeneracy.DEGENERATE.value
        odd += info["unique_essential_but_degenerate"]
        for msg in bad:
            res.fail(f"instance {trial} (N={n}, {'LP' if trial % 2 == 0 else 'MILP'}): {msg}")
    res.notes["degenerate_instances"] = degenerate
    res.notes["unique_essential_but_degenerate"] = odd
    return res


def check_sets(count: int = 100, seed: int = 0) -> SuiteResult:
    """The 3-bus example, its relaxed-line variant, then a random batch."""
    res = SuiteResult("sets")
    o = case3_oracle()
    table = subset_objectives(o)
    sup = support_set_by_removal(o).indices
    irr = irreducible_set(o).indices
    res.notes.update(case3_support=sorted(sup), case3_irreducible=sorted(irr))
    res.checked += 4
    if sup != {1}:
        res.fail(f"case3 support {sorted(sup)} != [1]")
    if len(irr) != 2 or 1 not in irr or irr not in table.irreducible_sets():
        res.fail(f"case3 irreducible {sorted(irr)} is not a size-2 set containing 1")
    if is_degenerate(o) is not Degeneracy.DEGENERATE:
        res.fail("case3 should be degenerate")
    relaxed = two_stage_essential(case3_oracle(capacity=1000.0))
    if relaxed.kind is not SetKind.ESSENTIAL or relaxed.indices != {1}:
        res.fail(f"relaxed case3: {relaxed.kind.value} {sorted(relaxed.indices)}")
    batch = structural_batch(count, seed)
    res.checked += batch.checked
    res.failures += batch.failures
    res.notes.update(batch.notes)
    return res


# --------------------------------------------------------------------------
# Theory
# --------------------------------------------------------------------------


def risk_monotonicity_violations(n_max: int = 500, betas=MONOTONICITY_BETAS) -> list[str]:
    """Monotonicity of the posterior risk in beta, k and N over a full grid."""
    bad = []
    betas = sorted(betas)
    table = {beta: [None, None] + [[epsilon_posterior(n, k, beta) for k in range(n + 1)]
                                   for n in range(2, n_max + 2)]
             for beta in betas}
    for n in range(2, n_max + 1):
        for k in range(n + 1):
            col = [table[b][n][k] for b in betas]
            if any(col[j] < col[j + 1] for j in range(len(col) - 1)):
                bad.append(f"not decreasing in beta at N={n}, k={k}")
            for b in betas:
                row = table[b][n]
                if k < n and row[k] > row[k + 1]:
                    bad.append(f"not increasing in k at N={n}, k={k}, beta={b}")
                if table[b][n + 1][k] > row[k]:
                    bad.append(f"not decreasing in N at N={n}, k={k}, beta={b}")
    return bad


def exact_binomial_tail(n: int, h: int, eps) -> Fraction:
    e = Fraction(eps)
    return sum((Fraction(math.comb(n, i)) * e ** i * (1 - e) ** (n - i) for i in range(h)),
               Fraction(0))


def exact_sample_complexity(eps: float, beta: float, h: int, n_max: int = 2000) -> int | None:
    """Linear scan with rational arithmetic; ``None`` if above ``n_max``."""
    e, b = Fraction(eps), Fraction(beta)
    one_minus = 1 - e
    for n in range(h, n_max + 1):
        tail = sum(Fraction(math.comb(n, i)) * e ** i * one_minus ** (n - i) for i in range(h))
        if tail <= b:
            return n
    return None


def check_theory(grid_n: int = 500) -> SuiteResult:
    res = SuiteResult("theory")
    bad = risk_monotonicity_violations(grid_n)
    res.checked += 3 * sum(n + 1 for n in range(2, grid_n + 1)) * len(MONOTONICITY_BETAS)
    res.failures += bad[:20]
    for n in range(1, 31):
        for h in range(0, n + 1):
            for eps in (0.01, 0.05, 0.1, 0.5):
                res.checked += 1
                err = abs(binomial_tail(n, h, eps) - float(exact_binomial_tail(n, h, eps)))
                if err > 1e-12:
                    res.fail(f"binomial tail N={n}, h={h}, eps={eps}: error {err:.3g}")
    res.checked += 1
    if sample_complexity_convex(ComplexityQuery(0.05, 0.01, 1)) != 90:
        res.fail("sample complexity (0.05, 0.01, 1) != 90")
    for (eps, beta) in ((0.05, 0.01), (0.1, 1e-3), (0.2, 0.05)):
        for h in range(1, 11):
            ref = exact_sample_complexity(eps, beta, h)
            got = sample_complexity_convex(ComplexityQuery(eps, beta, h))
            res.checked += 1
            if ref != got:
                res.fail(f"sample complexity eps={eps}, beta={beta}, h={h}: {got} != exact {ref}")
    return res


def run_suite(name: str, seed: int = 0) -> SuiteResult:
    if name == "lp":
        return check_lp_oracle(seed=seed)
    if name == "milp":
        return check_milp_oracle(seed=seed)
    if name == "sets":
        return check_sets(seed=seed)
    if name == "theory":
        return check_theory()
    raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
