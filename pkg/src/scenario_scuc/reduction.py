"""Support, irreducible and essential scenario sets.

Scenarios are labelled ``1..N``.  A scenario problem is any
:class:`ScenarioProgram`: a MILP whose rows are tagged either deterministic
(label 0) or with the scenario that generated them.  Restricting the program
to a subset of scenarios drops the other scenarios' rows.

Objective comparisons go through one shared predicate
(:func:`scenario_scuc.milp.objectives_equal`).
"""

from __future__ import annotations

import enum
import itertools
import math
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .lp import DEFAULT_TOL, LinearProgram, LpStatus, TooLarge, solve_lp, strictly_feasible
from .milp import (OBJECTIVE_RTOL, MilpOptions, MilpStatus, MixedIntegerProgram,
                   NodeLimitExceeded, objectives_equal, solve_milp, strictly_less)

DUAL_THRESHOLD = 1e-6
BRUTE_FORCE_MAX = 12


class InfeasibleBase(RuntimeError):
    """The full scenario problem has no feasible point."""


class PreconditionWarning(UserWarning):
    """The strict-feasibility probe failed for the dual-based support search."""


class SetKind(str, enum.Enum):
    SUPPORT = "support"
    IRREDUCIBLE = "irreducible"
    ESSENTIAL = "essential"


class Degeneracy(str, enum.Enum):
    NON_DEGENERATE = "non-degenerate"
    DEGENERATE = "degenerate"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ScenarioProgram:
    """A MILP with scenario-tagged rows.

    ``row_scenario[r]`` is 0 for deterministic rows and ``i`` for rows of
    scenario ``i``.
    """

    mip: MixedIntegerProgram
    row_scenario: np.ndarray
    n_scenarios: int

    def __post_init__(self):
        rs = np.asarray(self.row_scenario, dtype=int)
        if rs.size != self.mip.relaxation.n_rows:
            raise ValueError("row_scenario needs one label per row")
        if rs.size and (rs.min() < 0 or rs.max() > self.n_scenarios):
            raise ValueError("scenario labels must lie in 0..n_scenarios")
        rs.setflags(write=False)
        object.__setattr__(self, "row_scenario", rs)

    @property
    def scenarios(self) -> frozenset[int]:
        return frozenset(range(1, self.n_scenarios + 1))

    @property
    def is_convex(self) -> bool:
        return not self.mip.binary_mask

    def rows_of(self, scenario: int) -> np.ndarray:
        return np.flatnonzero(self.row_scenario == scenario)

    def restrict(self, subset: Iterable[int]) -> MixedIntegerProgram:
        keep = np.isin(self.row_scenario, [0, *subset])
        return MixedIntegerProgram(self.mip.relaxation.select_rows(keep), self.mip.binary_mask)

    def fix_binaries(self, x) -> "ScenarioProgram":
        """Second-stage LP family with every binary fixed at its value in ``x``."""
        lp = self.mip.relaxation
        b = self.mip.binaries
        lo, hi = lp.lower.copy(), lp.upper.copy()
        lo[b] = hi[b] = np.round(np.asarray(x, dtype=float)[b])
        return ScenarioProgram(MixedIntegerProgram(lp.with_bounds(lo, hi)),
                               self.row_scenario, self.n_scenarios)


@dataclass
class SubsetSolution:
    objective: float
    solution: np.ndarray | None
    status: MilpStatus

    @property
    def feasible(self) -> bool:
        return self.solution is not None

    @property
    def exact(self) -> bool:
        return self.status is not MilpStatus.NODE_LIMIT


class ScenarioProblemOracle:
    """Solves ``SP(M)`` for scenario subsets ``M``; results are cached.

    Passing the solution of a superset as ``warm_start`` seeds branch and
    bound with a feasible incumbent, which enforces
    ``opt(M) <= opt(N)`` for ``M`` contained in ``N``.
    """

    def __init__(self, program: ScenarioProgram, options: MilpOptions = MilpOptions(),
                 rtol: float = OBJECTIVE_RTOL, cache: bool = True):
        self.program = program
        self.options = options
        self.rtol = rtol
        self._cache: dict[frozenset[int], SubsetSolution] | None = {} if cache else None
        self._lock = threading.Lock()
        self.calls = 0

    @property
    def n_scenarios(self) -> int:
        return self.program.n_scenarios

    def equal(self, a: float, b: float) -> bool:
        return objectives_equal(a, b, self.rtol)

    def less(self, a: float, b: float) -> bool:
        return strictly_less(a, b, self.rtol)

    def solve(self, subset: Iterable[int], warm_start=None) -> SubsetSolution:
        key = frozenset(subset)
        with self._lock:
            self.calls += 1
            if self._cache is not None and key in self._cache:
                return self._cache[key]
        mip = self.program.restrict(key)
        if not mip.binary_mask:
            res = solve_lp(mip.relaxation, self.options.tol)
            if res.status is LpStatus.UNBOUNDED:
                raise ValueError("scenario LP is unbounded")
            out = SubsetSolution(res.objective if res.optimal else math.inf, res.primal,
                                 MilpStatus.OPTIMAL if res.optimal else MilpStatus.INFEASIBLE)
        else:
            opts = self.options
            if warm_start is not None:
                opts = MilpOptions(warm_start=warm_start, absolute_gap=opts.absolute_gap,
                                   node_limit=opts.node_limit, branch_rule=opts.branch_rule,
                                   tol=opts.tol)
            try:
                res = solve_milp(mip, opts)
                out = SubsetSolution(res.objective, res.primal, res.status)
            except NodeLimitExceeded:
                out = SubsetSolution(math.inf, None, MilpStatus.NODE_LIMIT)
        with self._lock:
            if self._cache is not None:
                self._cache[key] = out
        return out


@dataclass
class ReductionResult:
    kind: SetKind
    indices: frozenset[int]
    degenerate: Degeneracy | None
    solve_count: int
    full_objective: float
    candidates: frozenset[int] | None = None
    second_stage_support: frozenset[int] | None = None
    lp_solve_count: int = 0
    precondition_ok: bool = True
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "indices": sorted(self.indices),
            "cardinality": len(self.indices),
            "degenerate": None if self.degenerate is None else self.degenerate.value,
            "solve_count": self.solve_count,
            "lp_solve_count": self.lp_solve_count,
            "full_objective": self.full_objective,
            "candidates": None if self.candidates is None else sorted(self.candidates),
            "second_stage_support": (None if self.second_stage_support is None
                                     else sorted(self.second_stage_support)),
            "precondition_ok": self.precondition_ok,
            "wall_time": self.wall_time,
        }


def _solve_full(oracle: ScenarioProblemOracle) -> SubsetSolution:
    full = oracle.solve(oracle.program.scenarios)
    if full.status is MilpStatus.NODE_LIMIT and not full.feasible:
        raise NodeLimitExceeded("SP(N) hit the node limit before finding a feasible point")
    if not full.feasible:
        raise InfeasibleBase("SP(N) has no feasible solution")
    return full


def support_set_by_removal(oracle: ScenarioProblemOracle, workers: int = 1) -> ReductionResult:
    """Scenarios whose removal strictly lowers the optimum (one solve per scenario)."""
    t0 = time.perf_counter()
    full = _solve_full(oracle)
    everything = oracle.program.scenarios

    def removal(i):
        return i, oracle.solve(everything - {i}, warm_start=full.solution)

    order = sorted(everything)
    if workers > 1 and len(order) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(removal, order))
    else:
        results = [removal(i) for i in order]
    support = frozenset(i for i, r in results if oracle.less(r.objective, full.objective))
    exact = full.exact and all(r.exact for _, r in results)
    return ReductionResult(SetKind.SUPPORT, support, None if exact else Degeneracy.UNKNOWN,
                           len(order) + 1, full.objective,
                           wall_time=time.perf_counter() - t0)


def scenario_dual_norms(program: ScenarioProgram, duals: np.ndarray) -> dict[int, float]:
    """Row-norm scaled 2-norm of each scenario's block of multipliers."""
    A = program.mip.relaxation.matrix
    row_norm = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
    scaled = np.abs(duals) * row_norm
    return {i: float(np.linalg.norm(scaled[program.rows_of(i)]))
            for i in range(1, program.n_scenarios + 1)}


def support_set_via_duals(program: ScenarioProgram, threshold: float = DUAL_THRESHOLD,
                          restrict_to_candidates: bool = False,
                          probe: bool = True) -> ReductionResult:
    """Support set of a convex (LP) scenario problem screened by its duals.

    Only scenarios with a nonzero multiplier block (above ``threshold`` times
    ``1 + max|c|``) are tested by removal.  Each candidate ``i`` is removed
    from the full set; with ``restrict_to_candidates`` the removal is instead
    tested on the candidate set ``M - i``.
    """
    if not program.is_convex:
        raise ValueError("dual screening needs a convex (LP) scenario problem")
    t0 = time.perf_counter()
    lp = program.mip.relaxation
    res = solve_lp(lp)
    if not res.optimal:
        raise InfeasibleBase(f"second-stage problem is {res.status.value}")
    precondition_ok = True
    if probe and program.n_scenarios:
        scen_rows = np.flatnonzero(program.row_scenario > 0)
        precondition_ok, _ = strictly_feasible(lp, scen_rows)
        if not precondition_ok:
            warnings.warn("scenario rows admit no strictly feasible point; dual screening "
                          "result may be incomplete", PreconditionWarning, stacklevel=2)
    scale = 1.0 + float(np.max(np.abs(lp.objective), initial=0.0))
    norms = scenario_dual_norms(program, res.duals)
    cand = frozenset(i for i, v in norms.items() if v > threshold * scale)
    base = cand if restrict_to_candidates else program.scenarios
    support = set()
    for i in sorted(cand):
        r = solve_lp(program.restrict(base - {i}).relaxation)
        if r.optimal and strictly_less(r.objective, res.objective):
            support.add(i)
    return ReductionResult(SetKind.SUPPORT, frozenset(support), None, 0, res.objective,
                           candidates=cand, lp_solve_count=len(cand) + 1,
                           precondition_ok=precondition_ok,
                           wall_time=time.perf_counter() - t0)


def default_order(n: int) -> list[int]:
    return list(range(n, 0, -1))


def irreducible_set(oracle: ScenarioProblemOracle, order: Sequence[int] | None = None,
                    full: SubsetSolution | None = None) -> ReductionResult:
    """Greedy single pass: drop each scenario whose removal keeps the optimum.

    Scenarios are visited in ``order`` (descending label by default); every
    subset solve is warm-started from the last accepted solution.
    """
    t0 = time.perf_counter()
    full = full or _solve_full(oracle)
    everything = oracle.program.scenarios
    order = default_order(oracle.n_scenarios) if order is None else list(order)
    if sorted(order) != sorted(everything):
        raise ValueError("order must be a permutation of the scenario labels")
    current, current_sol = set(everything), full
    exact = full.exact
    for i in order:
        r = oracle.solve(current - {i}, warm_start=current_sol.solution)
        exact &= r.exact
        if r.feasible and oracle.equal(r.objective, full.objective):
            current.discard(i)
            current_sol = r
    return ReductionResult(SetKind.IRREDUCIBLE, frozenset(current),
                           None if exact else Degeneracy.UNKNOWN, len(order) + 1,
                           full.objective, wall_time=time.perf_counter() - t0)


def is_degenerate(oracle: ScenarioProblemOracle) -> Degeneracy:
    """Compare ``opt(S)`` for the removal-based support set ``S`` with ``opt(N)``."""
    sup = support_set_by_removal(oracle)
    if sup.degenerate is Degeneracy.UNKNOWN:
        return Degeneracy.UNKNOWN
    full = oracle.solve(oracle.program.scenarios)
    r = oracle.solve(sup.indices, warm_start=full.solution)
    if not r.exact:
        return Degeneracy.UNKNOWN
    if oracle.equal(r.objective, sup.full_objective):
        return Degeneracy.NON_DEGENERATE
    return Degeneracy.DEGENERATE


def two_stage_essential(oracle: ScenarioProblemOracle,
                        second_stage: Callable[[np.ndarray], ScenarioProgram] | None = None,
                        order: Sequence[int] | None = None,
                        verify_degeneracy: bool = True,
                        threshold: float = DUAL_THRESHOLD) -> ReductionResult:
    """Essential set of a two-stage scenario problem, or an irreducible fallback.

    1. Solve ``SP(N)``.
    2. Fix the first-stage (binary) decisions and find the second-stage support
       set with :func:`support_set_via_duals`.
    3. If that set is invariant, the problem is non-degenerate and the set is
       the essential set.  Otherwise compute an irreducible set.

    In the fallback, ``verify_degeneracy`` additionally tests which members of
    the irreducible set are support scenarios (``|R|`` extra solves).  The
    problem is degenerate exactly when they do not make up the whole set; if
    they do, the irreducible set is the unique essential set.
    """
    t0 = time.perf_counter()
    calls0 = oracle.calls
    program = oracle.program
    second_stage = second_stage or program.fix_binaries
    full = _solve_full(oracle)
    if program.n_scenarios == 0:
        return ReductionResult(SetKind.ESSENTIAL, frozenset(), Degeneracy.NON_DEGENERATE, 1,
                               full.objective, second_stage_support=frozenset(),
                               wall_time=time.perf_counter() - t0)
    stage2 = support_set_via_duals(second_stage(full.solution), threshold=threshold)
    s_hat = stage2.indices
    r = oracle.solve(s_hat, warm_start=full.solution)
    common = dict(second_stage_support=s_hat, candidates=stage2.candidates,
                  lp_solve_count=stage2.lp_solve_count, precondition_ok=stage2.precondition_ok)
    if r.exact and full.exact and oracle.equal(r.objective, full.objective):
        return ReductionResult(SetKind.ESSENTIAL, s_hat, Degeneracy.NON_DEGENERATE,
                               oracle.calls - calls0, full.objective,
                               wall_time=time.perf_counter() - t0, **common)
    irr = irreducible_set(oracle, order, full=full)
    degenerate = Degeneracy.DEGENERATE
    kind = SetKind.IRREDUCIBLE
    if irr.degenerate is Degeneracy.UNKNOWN or not r.exact:
        degenerate = Degeneracy.UNKNOWN
    elif verify_degeneracy:
        everything = program.scenarios
        removals = [oracle.solve(everything - {s}, warm_start=full.solution) for s in irr.indices]
        if not all(x.exact for x in removals):
            degenerate = Degeneracy.UNKNOWN
        elif all(oracle.less(x.objective, full.objective) for x in removals):
            degenerate, kind = Degeneracy.NON_DEGENERATE, SetKind.ESSENTIAL
    return ReductionResult(kind, irr.indices, degenerate, oracle.calls - calls0, full.objective,
                           wall_time=time.perf_counter() - t0, **common)


# --------------------------------------------------------------------------
# Brute force over all 2^N subsets
# --------------------------------------------------------------------------


@dataclass
class SubsetTable:
    """Optimal values of every scenario subset, with set-theoretic queries."""

    n: int
    objectives: dict[frozenset[int], float]
    rtol: float = OBJECTIVE_RTOL
    exact: bool = True

    @property
    def full(self) -> frozenset[int]:
        return frozenset(range(1, self.n + 1))

    def opt(self, subset) -> float:
        return self.objectives[frozenset(subset)]

    def equal(self, a, b) -> bool:
        return objectives_equal(a, b, self.rtol)

    def less(self, a, b) -> bool:
        return strictly_less(a, b, self.rtol)

    def is_invariant(self, subset, base=None) -> bool:
        base = self.full if base is None else frozenset(base)
        return self.equal(self.opt(subset), self.opt(base))

    def support_set(self, base=None) -> frozenset[int]:
        base = self.full if base is None else frozenset(base)
        top = self.opt(base)
        return frozenset(s for s in base if self.less(self.opt(base - {s}), top))

    def invariant_sets(self) -> list[frozenset[int]]:
        top = self.opt(self.full)
        return [s for s, v in self.objectives.items() if self.equal(v, top)]

    def essential_sets(self) -> list[frozenset[int]]:
        inv = self.invariant_sets()
        k = min(len(s) for s in inv)
        return sorted((s for s in inv if len(s) == k), key=sorted)

    def irreducible_sets(self) -> list[frozenset[int]]:
        out = []
        for s in self.invariant_sets():
            v = self.opt(s)
            if all(self.less(self.opt(s - {x}), v) for x in s):
                out.append(s)
        return sorted(out, key=lambda s: (len(s), sorted(s)))

    def degeneracy(self) -> Degeneracy:
        if not self.exact:
            return Degeneracy.UNKNOWN
        ok = self.is_invariant(self.support_set())
        return Degeneracy.NON_DEGENERATE if ok else Degeneracy.DEGENERATE

    def monotonicity_violations(self) -> list[tuple[frozenset[int], int]]:
        """Pairs ``(M, i)`` where ``opt(M - i) > opt(M)`` beyond tolerance."""
        bad = []
        for s, v in self.objectives.items():
            for i in s:
                if self.less(v, self.opt(s - {i})):
                    bad.append((s, i))
        return bad


def subset_objectives(oracle: ScenarioProblemOracle) -> SubsetTable:
    """Solve ``SP(M)`` for all ``2^N`` subsets, largest first, warm-starting
    each subset from a one-larger superset."""
    n = oracle.n_scenarios
    if n > BRUTE_FORCE_MAX:
        raise TooLarge(f"N={n} exceeds the brute-force cap of {BRUTE_FORCE_MAX}")
    labels = list(range(1, n + 1))
    sols: dict[frozenset[int], SubsetSolution] = {}
    exact = True
    for size in range(n, -1, -1):
        for combo in itertools.combinations(labels, size):
            key = frozenset(combo)
            warm = None
            if size < n:
                parent = key | {next(i for i in labels if i not in key)}
                warm = sols[parent].solution
            sols[key] = oracle.solve(key, warm_start=warm)
            exact &= sols[key].exact
    full = sols[frozenset(labels)]
    if not full.feasible:
        raise InfeasibleBase("SP(N) has no feasible solution")
    return SubsetTable(n, {k: v.objective for k, v in sols.items()}, oracle.rtol, exact)


def brute_force_essential_sets(oracle: ScenarioProblemOracle) -> list[frozenset[int]]:
    """Every invariant subset of minimal cardinality, by full enumeration."""
    return subset_objectives(oracle).essential_sets()
