"""Best-bound branch and bound over binary variables."""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .lp import (DEFAULT_TOL, LinearProgram, LpStatus, MalformedProblem, ToleranceConfig,
                 TooLarge, solve_lp)

INTEGRALITY_TOL = 1e-6
OBJECTIVE_RTOL = 1e-6


def objectives_equal(a: float, b: float, rtol: float = OBJECTIVE_RTOL) -> bool:
    """Shared equality predicate for optimal values: ``|a-b| <= rtol*(1+|a|)``."""
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= rtol * (1.0 + abs(a))


def strictly_less(a: float, b: float, rtol: float = OBJECTIVE_RTOL) -> bool:
    """``a < b`` beyond the tolerance of :func:`objectives_equal`."""
    return a < b and not objectives_equal(a, b, rtol)


class MilpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NODE_LIMIT = "node_limit"


class NodeLimitExceeded(RuntimeError):
    """Node budget exhausted before any incumbent was found."""


class BranchRule(str, enum.Enum):
    MOST_FRACTIONAL = "most-fractional"
    LOWEST_INDEX = "lowest-index"


@dataclass(frozen=True)
class MixedIntegerProgram:
    relaxation: LinearProgram
    binary_mask: frozenset[int] = frozenset()

    def __post_init__(self):
        lp = self.relaxation
        for j in self.binary_mask:
            if not 0 <= j < lp.n_vars:
                raise MalformedProblem(f"binary index {j} out of range")
            if lp.lower[j] < 0.0 or lp.upper[j] > 1.0:
                raise MalformedProblem(f"binary variable {j} has bounds outside [0, 1]")

    @property
    def binaries(self) -> np.ndarray:
        return np.array(sorted(self.binary_mask), dtype=int)

    def is_feasible(self, x, tol: float = DEFAULT_TOL.feasibility) -> bool:
        x = np.asarray(x, dtype=float)
        if not self.relaxation.is_feasible(x, tol):
            return False
        b = self.binaries
        return bool(np.all(np.abs(x[b] - np.round(x[b])) <= INTEGRALITY_TOL))


@dataclass(frozen=True)
class MilpOptions:
    warm_start: np.ndarray | None = None
    absolute_gap: float = 0.0
    node_limit: int = 100_000
    branch_rule: BranchRule = BranchRule.MOST_FRACTIONAL
    tol: ToleranceConfig = DEFAULT_TOL

    def __post_init__(self):
        if self.absolute_gap < 0:
            raise ValueError("absolute_gap must be non-negative")
        object.__setattr__(self, "branch_rule", BranchRule(self.branch_rule))


@dataclass
class MilpSolution:
    status: MilpStatus
    primal: np.ndarray | None = None
    objective: float = math.inf
    node_count: int = 0
    warm_start_used: bool = False
    bound: float = -math.inf

    @property
    def optimal(self) -> bool:
        return self.status is MilpStatus.OPTIMAL

    @property
    def feasible(self) -> bool:
        return self.primal is not None


def _snap(x: np.ndarray, binaries: np.ndarray) -> np.ndarray:
    x = x.copy()
    x[binaries] = np.round(x[binaries])
    return x


def _pick_branch(x, binaries, rule: BranchRule):
    frac = np.abs(x[binaries] - np.round(x[binaries]))
    cand = np.flatnonzero(frac > INTEGRALITY_TOL)
    if cand.size == 0:
        return None
    if rule is BranchRule.LOWEST_INDEX:
        return int(binaries[cand[0]])
    # most fractional; argmin returns the first (lowest index) on ties
    dist = np.abs(frac[cand] - 0.5)
    return int(binaries[cand[int(np.argmin(dist))]])


def solve_milp(mip: MixedIntegerProgram, opts: MilpOptions = MilpOptions()) -> MilpSolution:
    """Exact branch and bound (best-bound node order, creation order on ties).

    A feasible ``warm_start`` seeds the incumbent, so the returned objective
    never exceeds the warm start's.  With ``absolute_gap == 0`` the result is
    optimal up to the shared objective tolerance.  When the node limit is hit
    the best incumbent is returned with status ``NODE_LIMIT``;
    :class:`NodeLimitExceeded` is raised if there is none.
    """
    lp = mip.relaxation
    c = lp.objective
    binaries = mip.binaries
    tol = opts.tol
    inc_x, inc_obj, used = None, math.inf, False
    if opts.warm_start is not None:
        ws = np.asarray(opts.warm_start, dtype=float)
        if ws.size != lp.n_vars:
            raise MalformedProblem("warm start has the wrong length")
        if mip.is_feasible(ws, 10 * tol.feasibility):
            inc_x = _snap(ws, binaries)
            inc_obj = float(c @ inc_x)
            used = True

    def prune_level(obj):
        gap = max(opts.absolute_gap, 1e-9 * (1.0 + abs(obj)))
        return obj - gap

    counter = itertools.count()
    root_lo, root_hi = lp.lower.copy(), lp.upper.copy()
    heap = [(-math.inf, next(counter), root_lo, root_hi)]
    nodes = 0
    global_bound = -math.inf
    while heap:
        bound, _, lo, hi = heapq.heappop(heap)
        if inc_x is not None and bound >= prune_level(inc_obj):
            continue
        if nodes >= opts.node_limit:
            heapq.heappush(heap, (bound, next(counter), lo, hi))
            global_bound = heap[0][0]
            if inc_x is None:
                raise NodeLimitExceeded(f"no incumbent after {nodes} nodes")
            return MilpSolution(MilpStatus.NODE_LIMIT, inc_x, inc_obj, nodes, used, global_bound)
        nodes += 1
        res = solve_lp(lp.with_bounds(lo, hi), tol)
        if res.status is LpStatus.INFEASIBLE:
            continue
        if res.status is LpStatus.UNBOUNDED:
            raise MalformedProblem("LP relaxation is unbounded; bound the continuous variables")
        if inc_x is not None and res.objective >= prune_level(inc_obj):
            continue
        j = _pick_branch(res.primal, binaries, opts.branch_rule)
        if j is None:
            x = _snap(res.primal, binaries)
            inc_x, inc_obj = x, float(c @ x)
            continue
        for value in (0.0, 1.0):
            clo, chi = lo.copy(), hi.copy()
            clo[j] = chi[j] = value
            heapq.heappush(heap, (res.objective, next(counter), clo, chi))
    if inc_x is None:
        return MilpSolution(MilpStatus.INFEASIBLE, node_count=nodes, warm_start_used=used)
    return MilpSolution(MilpStatus.OPTIMAL, inc_x, inc_obj, nodes, used, inc_obj)


BINARY_ORACLE_MAX = 12


def binary_enumeration_oracle(mip: MixedIntegerProgram,
                              tol: ToleranceConfig = DEFAULT_TOL) -> MilpSolution:
    """Solve the LP for every binary assignment and keep the best (test oracle)."""
    b = mip.binaries
    if b.size > BINARY_ORACLE_MAX:
        raise TooLarge(f"{b.size} binaries exceeds the enumeration cap of {BINARY_ORACLE_MAX}")
    lp = mip.relaxation
    best = MilpSolution(MilpStatus.INFEASIBLE)
    count = 0
    for assignment in itertools.product((0.0, 1.0), repeat=b.size):
        lo, hi = lp.lower.copy(), lp.upper.copy()
        vals = np.array(assignment)
        if np.any(vals < lo[b]) or np.any(vals > hi[b]):
            continue
        lo[b] = hi[b] = vals
        count += 1
        res = solve_lp(lp.with_bounds(lo, hi), tol)
        if res.status is LpStatus.UNBOUNDED:
            raise MalformedProblem("unbounded assignment LP")
        if res.optimal and res.objective < best.objective:
            best = MilpSolution(MilpStatus.OPTIMAL, res.primal, res.objective)
    best.node_count = count
    return best
