"""Linear programs and a bounded-variable primal simplex solver.

Problems are stored in row-activity form::

    min  c @ x
    s.t. row_lower <= A @ x <= row_upper
         lower <= x <= upper

where each declared row carries a sense (``<=``, ``>=`` or ``=``) and a right
hand side.  Infinite bounds are represented by ``math.inf`` / ``-math.inf``
(``null`` in JSON files).

Dual convention
---------------
``LpSolution.duals[i]`` is the marginal ``d(objective) / d(rhs_i)``.  At an
optimum of a minimisation this makes duals of ``>=`` rows non-negative and
duals of ``<=`` rows non-positive; equality rows may carry either sign.  The
same convention is used everywhere in the package.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

INF = math.inf


class Sense(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class MalformedProblem(ValueError):
    """Raised when problem data is dimensionally inconsistent."""


class NumericalFailure(RuntimeError):
    """Raised when the simplex breaks down after all configured restarts."""


class TooLarge(ValueError):
    """Raised by brute-force oracles when the instance exceeds their cap."""


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances shared by the LP and MILP solvers.

    ``optimality`` is applied to reduced costs relative to ``1 + max|c|``.
    """

    feasibility: float = 1e-7
    optimality: float = 1e-9
    pivot: float = 1e-9
    degenerate_switch: int = 50
    max_iterations: int | None = None
    restarts: int = 1


DEFAULT_TOL = ToleranceConfig()


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class LinearProgram:
    """Immutable LP container with tagged constraint rows.

    Parameters
    ----------
    objective : array_like, shape (n,)
    matrix : array_like or sparse matrix, shape (m, n)
    senses : sequence of Sense or str, length m
    rhs : array_like, shape (m,)
    lower, upper : array_like, shape (n,), optional
        Variable bounds; default ``[0, inf)``.
    groups : sequence of hashable, optional
        One opaque tag per row.  Rows sharing a tag form a group.
    """

    __slots__ = ("objective", "matrix", "senses", "rhs", "lower", "upper", "groups",
                 "_dense")

    def __init__(self, objective, matrix, senses, rhs, lower=None, upper=None,
                 groups: Sequence[Hashable] | None = None):
        c = np.array(objective, dtype=float).ravel()
        n = c.size
        if sp.issparse(matrix):
            A = sp.csr_matrix(matrix, dtype=float)
        else:
            A = np.asarray(matrix, dtype=float)
            if A.size == 0:
                A = A.reshape(-1, n) if n else A.reshape(0, 0)
            A = sp.csr_matrix(A)
        m = A.shape[0]
        if A.shape[1] != n and not (m == 0 and A.shape[1] == 0):
            raise MalformedProblem(f"matrix has {A.shape[1]} columns, objective has {n}")
        if m == 0:
            A = sp.csr_matrix((0, n))
        senses = tuple(Sense(s) for s in senses)
        b = np.array(rhs, dtype=float).ravel()
        if len(senses) != m or b.size != m:
            raise MalformedProblem(f"{m} rows but {len(senses)} senses and {b.size} rhs")
        lo = np.zeros(n) if lower is None else np.array(lower, dtype=float).ravel()
        hi = np.full(n, INF) if upper is None else np.array(upper, dtype=float).ravel()
        if lo.size != n or hi.size != n:
            raise MalformedProblem("bound vectors must match the objective length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(np.isnan(b)):
            raise MalformedProblem("NaN in bounds or rhs")
        if np.any(lo > hi):
            bad = int(np.flatnonzero(lo > hi)[0])
            raise MalformedProblem(f"variable {bad} has lower bound above upper bound")
        if not np.all(np.isfinite(A.data)) or not np.all(np.isfinite(c)):
            raise MalformedProblem("non-finite coefficient")
        groups = tuple(groups) if groups is not None else (None,) * m
        if len(groups) != m:
            raise MalformedProblem("one group tag per row is required")
        A.sum_duplicates()
        A.data.setflags(write=False)
        self.objective = _freeze(c)
        self.matrix = A
        self.senses = senses
        self.rhs = _freeze(b)
        self.lower = _freeze(lo)
        self.upper = _freeze(hi)
        self.groups = groups
        self._dense = None

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Activity bounds ``(row_lower, row_upper)`` implied by senses."""
        lo = np.full(self.n_rows, -INF)
        hi = np.full(self.n_rows, INF)
        for i, s in enumerate(self.senses):
            if s is not Sense.LE:
                lo[i] = self.rhs[i]
            if s is not Sense.GE:
                hi[i] = self.rhs[i]
        return lo, hi

    def dense(self) -> np.ndarray:
        if self._dense is None:
            self._dense = _freeze(self.matrix.toarray())
        return self._dense

    def rows_in_group(self, predicate) -> np.ndarray:
        """Indices of rows whose tag satisfies ``predicate(tag)``."""
        return np.array([i for i, g in enumerate(self.groups) if predicate(g)], dtype=int)

    def with_bounds(self, lower=None, upper=None) -> "LinearProgram":
        """Copy with replaced variable bounds; row data is shared."""
        lp = object.__new__(LinearProgram)
        lp.objective, lp.matrix, lp.senses, lp.rhs = self.objective, self.matrix, self.senses, self.rhs
        lp.groups = self.groups
        lo = self.lower if lower is None else _freeze(np.array(lower, dtype=float))
        hi = self.upper if upper is None else _freeze(np.array(upper, dtype=float))
        if lo.size != self.n_vars or hi.size != self.n_vars or np.any(lo > hi):
            raise MalformedProblem("invalid replacement bounds")
        lp.lower, lp.upper = lo, hi
        lp._dense = self._dense
        return lp

    def select_rows(self, keep) -> "LinearProgram":
        """Copy keeping only the given row indices (or boolean mask)."""
        idx = np.arange(self.n_rows)[np.asarray(keep)] if len(keep) else np.zeros(0, dtype=int)
        return LinearProgram(self.objective, self.matrix[idx], [self.senses[i] for i in idx],
                             self.rhs[idx], self.lower, self.upper,
                             [self.groups[i] for i in idx])

    def residuals(self, x) -> np.ndarray:
        """Per-row constraint violation of ``x`` (zero when satisfied)."""
        act = self.matrix @ np.asarray(x, dtype=float)
        lo, hi = self.row_bounds()
        return np.maximum(np.maximum(lo - act, act - hi), 0.0)

    def is_feasible(self, x, tol: float = DEFAULT_TOL.feasibility) -> bool:
        x = np.asarray(x, dtype=float)
        if x.size != self.n_vars:
            return False
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        return bool(np.all(self.residuals(x) <= tol))

    def __repr__(self) -> str:
        return f"LinearProgram(n_vars={self.n_vars}, n_rows={self.n_rows}, nnz={self.matrix.nnz})"


@dataclass
class LpSolution:
    """Result of an LP solve.

    ``duals`` follow the module-level marginal convention.  ``ray`` holds an
    improving primal direction when unbounded, or the phase-one row multipliers
    (a Farkas-type certificate) when infeasible.
    """

    status: LpStatus
    primal: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = math.nan
    reduced_costs: np.ndarray | None = None
    ray: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class LpBuilder:
    """Incremental construction of a LinearProgram with named variables."""

    def __init__(self):
        self.names: list[str] = []
        self.cost: list[float] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.binary: list[int] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self.senses: list[Sense] = []
        self.rhs: list[float] = []
        self.groups: list[Hashable] = []

    def add_var(self, name: str, lower=0.0, upper=INF, cost=0.0, binary=False) -> int:
        j = len(self.names)
        self.names.append(name)
        self.cost.append(float(cost))
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        if binary:
            self.binary.append(j)
        return j

    def add_row(self, coeffs: dict[int, float] | Iterable[tuple[int, float]], sense, rhs: float,
                group: Hashable = None) -> int:
        i = len(self.rhs)
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        for j, v in items:
            if v != 0.0:
                self._rows.append(i)
                self._cols.append(j)
                self._vals.append(float(v))
        self.senses.append(Sense(sense))
        self.rhs.append(float(rhs))
        self.groups.append(group)
        return i

    def build(self) -> LinearProgram:
        n, m = len(self.names), len(self.rhs)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
        return LinearProgram(self.cost, A, self.senses, self.rhs, self.lower, self.upper, self.groups)


# --------------------------------------------------------------------------
# Simplex
# --------------------------------------------------------------------------


class _Simplex:
    """Bounded primal simplex on ``A x - s = 0`` with bounds on ``x`` and ``s``.

    The basis is kept as the structural basic set ``S`` and the set ``T`` of rows
    whose activity is nonbasic; ``|S| == |T|`` and the only matrix factorised is
    the ``k x k`` block ``A[T, S]``.  This is cheap when the number of
    variables is small relative to the number of rows, which is the shape of
    scenario problems.
    """

    def __init__(self, A, c, lo, hi, tol: ToleranceConfig, bland: bool):
        self.A = A
        self.dense = isinstance(A, np.ndarray)
        self.m, self.n = A.shape
        self.c = np.concatenate([c, np.zeros(self.m)])
        self.lo = lo
        self.hi = hi
        self.tol = tol
        self.bland = bland
        self.cscale = 1.0 + (float(np.max(np.abs(c))) if c.size else 0.0)
        n, m = self.n, self.m
        self.y = np.zeros(n + m)
        for j in range(n):
            if math.isfinite(lo[j]):
                self.y[j] = lo[j]
            elif math.isfinite(hi[j]):
                self.y[j] = hi[j]
        self.basic = np.zeros(n + m, dtype=bool)
        self.basic[n:] = True
        self.S: list[int] = []
        self.T: list[int] = []
        self.iterations = 0
        self._refresh()

    # -- linear algebra -------------------------------------------------
    def _cols(self, S):
        if self.dense:
            return self.A[:, S]
        return self.A[:, S].toarray()

    def _block(self):
        if self.dense:
            return self.A[np.ix_(self.T, self.S)]
        return self.A[self.T][:, self.S].toarray()

    def _refresh(self):
        n = self.n
        x = self.y[:n].copy()
        x[self.S] = 0.0
        k = len(self.S)
        if k:
            M = self._block()
            self.M = M
            rhs = self.y[n + np.array(self.T)] - (self.A[self.T] @ x)
            try:
                xs = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError as exc:
                raise NumericalFailure("singular basis") from exc
            x[self.S] = xs
        else:
            self.M = np.zeros((0, 0))
        act = self.A @ x
        self.y[:n] = x
        rows = ~self.basic[n:]
        keep = self.y[n:][rows]
        self.y[n:] = act
        self.y[n:][rows] = keep

    def _duals(self, cost):
        n = self.n
        pi = -cost[n:].copy()
        pi[~self.basic[n:]] = 0.0
        if self.S:
            cS = cost[self.S]
            R_pi = pi
            cols = self._cols(self.S)
            rhs = cS - cols.T @ R_pi
            piT = np.linalg.solve(self.M.T, rhs)
            pi[self.T] = piT
        d = np.empty(n + self.m)
        d[:n] = cost[:n] - self.A.T @ pi
        d[n:] = cost[n:] + pi
        d[self.basic] = 0.0
        return pi, d

    def _direction(self, q):
        """Column ``w = B^-1 a_q`` split into structural and row parts."""
        n, m = self.n, self.m
        if q < n:
            aq = self.A[:, q]
            aq = aq if self.dense else aq.toarray().ravel()
        else:
            aq = np.zeros(m)
            aq[q - n] = -1.0
        if self.S:
            wS = np.linalg.solve(self.M, aq[self.T])
            full = self._cols(self.S) @ wS
        else:
            wS = np.zeros(0)
            full = np.zeros(m)
        wR = full - aq
        return wS, wR

    # -- iterations -----------------------------------------------------
    def _phase_cost(self):
        ft = self.tol.feasibility
        y, lo, hi = self.y, self.lo, self.hi
        cost = np.zeros_like(y)
        below = self.basic & (y < lo - ft)
        above = self.basic & (y > hi + ft)
        cost[below] = -1.0
        cost[above] = 1.0
        return cost, bool(below.any() or above.any())

    def _choose_entering(self, d, scale):
        tol = self.tol.optimality * scale
        y, lo, hi = self.y, self.lo, self.hi
        nb = ~self.basic
        can_up = nb & (y < hi) & (d < -tol)
        can_dn = nb & (y > lo) & (d > tol)
        cand = np.flatnonzero(can_up | can_dn)
        if cand.size == 0:
            return None, 0
        if self.bland:
            q = int(cand[0])
        else:
            q = int(cand[np.argmax(np.abs(d[cand]))])
        return q, (1 if can_up[q] else -1)

    def _ratio(self, q, sigma, phase1):
        n = self.n
        wS, wR = self._direction(q)
        idx = np.concatenate([np.array(self.S, dtype=int),
                              n + np.flatnonzero(self.basic[n:])])
        rate = -sigma * np.concatenate([wS, wR[self.basic[n:]]])
        yb, lob, hib = self.y[idx], self.lo[idx], self.hi[idx]
        ft, pt = self.tol.feasibility, self.tol.pivot
        t = np.full(idx.size, INF)
        target = np.full(idx.size, np.nan)
        up = rate > pt
        dn = rate < -pt
        if phase1:
            below = yb < lob - ft
            above = yb > hib + ft
            feas = ~(below | above)
            m1 = up & below
            t[m1] = (lob[m1] - yb[m1]) / rate[m1]
            target[m1] = lob[m1]
            m2 = dn & above
            t[m2] = (hib[m2] - yb[m2]) / rate[m2]
            target[m2] = hib[m2]
            up &= feas
            dn &= feas
        with np.errstate(invalid="ignore"):
            tu = (hib[up] - yb[up]) / rate[up]
            td = (lob[dn] - yb[dn]) / rate[dn]
        t[up] = tu
        target[up] = hib[up]
        t[dn] = td
        target[dn] = lob[dn]
        t = np.maximum(t, 0.0)
        t_flip = self.hi[q] - self.lo[q]
        tmin = float(t.min()) if t.size else INF
        if t_flip <= tmin:
            return None, t_flip, None, wS
        if not math.isfinite(tmin):
            return None, INF, None, wS
        near = np.flatnonzero(t <= tmin + 1e-12 * max(1.0, tmin))
        if self.bland:
            pos = int(near[np.argmin(idx[near])])
        else:
            pos = int(near[np.argmax(np.abs(rate[near]))])
        return int(idx[pos]), float(t[pos]), float(target[pos]), wS

    def _pivot(self, q, p, p_value):
        n = self.n
        self.basic[q] = True
        self.basic[p] = False
        self.y[p] = p_value
        q_row, p_row = q >= n, p >= n
        if not q_row and not p_row:
            self.S[self.S.index(p)] = q
        elif not q_row and p_row:
            self.S.append(q)
            self.T.append(p - n)
        elif q_row and not p_row:
            self.S.remove(p)
            self.T.remove(q - n)
        else:
            self.T[self.T.index(q - n)] = p - n

    def run(self) -> LpSolution:
        n, m = self.n, self.m
        max_it = self.tol.max_iterations or (20 * (n + m) + 1000)
        degenerate = 0
        phase1 = True
        while True:
            if self.iterations > max_it:
                raise NumericalFailure(f"iteration limit {max_it} reached")
            if phase1:
                cost, infeasible = self._phase_cost()
                if not infeasible:
                    phase1 = False
                    continue
                scale = 1.0
            else:
                cost = self.c
                scale = self.cscale
            pi, d = self._duals(cost)
            q, sigma = self._choose_entering(d, scale)
            if q is None:
                if phase1:
                    return LpSolution(LpStatus.INFEASIBLE, ray=pi, iterations=self.iterations)
                return self._finish(pi, d)
            p, step, target, wS = self._ratio(q, sigma, phase1)
            self.iterations += 1
            if p is None:
                if not math.isfinite(step):
                    if phase1:
                        raise NumericalFailure("unbounded phase-one direction")
                    ray = np.zeros(n)
                    if q < n:
                        ray[q] = sigma
                    ray[self.S] = -sigma * wS
                    return LpSolution(LpStatus.UNBOUNDED, ray=ray, iterations=self.iterations)
                # bound flip of the entering variable
                self.y[q] = self.hi[q] if sigma > 0 else self.lo[q]
                self._refresh()
                continue
            if step <= 1e-12:
                degenerate += 1
                if degenerate >= self.tol.degenerate_switch:
                    self.bland = True
            else:
                degenerate = 0
            self.y[q] = self.y[q] + sigma * step
            self._pivot(q, p, target)
            self._refresh()

    def _finish(self, pi, d) -> LpSolution:
        x = self.y[: self.n].copy()
        obj = float(self.c[: self.n] @ x)
        return LpSolution(LpStatus.OPTIMAL, primal=x, duals=pi.copy(), objective=obj,
                          reduced_costs=d[: self.n].copy(), iterations=self.iterations)


def solve_lp(lp: LinearProgram, tol: ToleranceConfig = DEFAULT_TOL) -> LpSolution:
    """Solve ``lp`` to optimality, returning primal values and row duals.

    Starts from the all-slack basis, runs a composite phase one (minimum sum of
    infeasibilities) then phase two.  Dantzig pricing switches to Bland's rule
    after ``tol.degenerate_switch`` consecutive degenerate pivots; on a
    breakdown the solve restarts with Bland's rule from the first pivot.
    """
    m, n = lp.n_rows, lp.n_vars
    row_lo, row_hi = lp.row_bounds()
    nnz_rows = np.diff(lp.matrix.indptr) > 0
    ft = tol.feasibility
    empty = np.flatnonzero(~nnz_rows)
    if empty.size:
        if np.any(row_lo[empty] > ft) or np.any(row_hi[empty] < -ft):
            return LpSolution(LpStatus.INFEASIBLE)
    keep = np.flatnonzero(nnz_rows)
    A = lp.matrix[keep] if empty.size else lp.matrix
    if A.shape[0] * max(n, 1) <= 4_000_000:
        A = A.toarray()
    else:
        A = sp.csr_matrix(A)
    lo = np.concatenate([lp.lower, row_lo[keep]])
    hi = np.concatenate([lp.upper, row_hi[keep]])
    last: Exception | None = None
    for attempt in range(tol.restarts + 1):
        try:
            res = _Simplex(A, lp.objective, lo, hi, tol, bland=attempt > 0).run()
            break
        except (NumericalFailure, np.linalg.LinAlgError) as exc:
            last = exc
    else:
        raise NumericalFailure(f"simplex failed after {tol.restarts} restart(s): {last}")
    if empty.size:
        if res.duals is not None:
            full = np.zeros(m)
            full[keep] = res.duals
            res.duals = full
        if res.ray is not None and res.status is LpStatus.INFEASIBLE:
            full = np.zeros(m)
            full[keep] = res.ray
            res.ray = full
    return res


def dual_objective(lp: LinearProgram, sol: LpSolution) -> float:
    """Objective of the dual certificate ``(duals, reduced_costs)`` of ``sol``."""
    total = float(sol.duals @ lp.rhs)
    d = sol.reduced_costs
    pos = d > 0
    neg = d < 0
    total += float(d[pos] @ lp.lower[pos]) + float(d[neg] @ lp.upper[neg])
    return total


def strictly_feasible(lp: LinearProgram, rows: Sequence[int] | None = None,
                      tol: ToleranceConfig = DEFAULT_TOL) -> tuple[bool, float]:
    """Probe for a point satisfying the selected inequality rows strictly.

    Maximises a common margin ``tau <= 1`` by which every selected inequality
    row is satisfied; equality rows and unselected rows stay as they are.
    Returns ``(tau > feasibility tolerance, tau)``.
    """
    m, n = lp.n_rows, lp.n_vars
    sel = np.zeros(m, dtype=bool)
    sel[np.arange(m) if rows is None else np.asarray(rows, dtype=int)] = True
    sel &= np.array([s is not Sense.EQ for s in lp.senses], dtype=bool)
    col = np.zeros((m, 1))
    for i in np.flatnonzero(sel):
        norm = float(np.sqrt(lp.matrix[i].multiply(lp.matrix[i]).sum())) or 1.0
        col[i, 0] = -norm if lp.senses[i] is Sense.GE else norm
    A = sp.hstack([lp.matrix, sp.csr_matrix(col)]).tocsr()
    c = np.zeros(n + 1)
    c[-1] = -1.0
    probe = LinearProgram(c, A, lp.senses, lp.rhs, np.append(lp.lower, -INF),
                          np.append(lp.upper, 1.0), lp.groups)
    res = solve_lp(probe, tol)
    if not res.optimal:
        return False, -INF
    tau = float(res.primal[-1])
    return tau > tol.feasibility, tau


# --------------------------------------------------------------------------
# Vertex enumeration oracle
# --------------------------------------------------------------------------

VERTEX_ORACLE_MAX_VARS = 12
VERTEX_ORACLE_MAX_COMBOS = 3_000_000


def _unit_rows(rows, rhs, n):
    M = np.array(rows, dtype=float).reshape(-1, n)
    r = np.array(rhs, dtype=float)
    norms = np.linalg.norm(M, axis=1)
    norms[norms == 0] = 1.0
    return M / norms[:, None], r / norms


def vertex_oracle(lp: LinearProgram, tol: float = 1e-7) -> LpSolution:
    """Exhaustive basic-feasible-point enumeration (test oracle).

    Every choice of ``n`` linearly independent hyperplanes drawn from the rows
    and the finite variable bounds is solved; equality rows are always
    included.  Requires a bounded feasible region.  Duals are not produced.
    """
    n = lp.n_vars
    if n > VERTEX_ORACLE_MAX_VARS:
        raise TooLarge(f"{n} variables exceeds the vertex-oracle cap of {VERTEX_ORACLE_MAX_VARS}")
    if n == 0:
        ok = lp.is_feasible(np.zeros(0), tol)
        return LpSolution(LpStatus.OPTIMAL, np.zeros(0), np.zeros(0), 0.0) if ok else \
            LpSolution(LpStatus.INFEASIBLE)
    A = lp.dense()
    row_lo, row_hi = lp.row_bounds()
    eq_rows, eq_rhs, planes, plane_rhs = [], [], [], []
    for i, s in enumerate(lp.senses):
        if not np.any(A[i]):
            continue  # empty rows only affect feasibility, checked below
        if s is Sense.EQ:
            eq_rows.append(A[i])
            eq_rhs.append(lp.rhs[i])
        else:
            planes.append(A[i])
            plane_rhs.append(lp.rhs[i])
    n_rows = len(planes)
    eye = np.eye(n)
    bound_opts = []  # plane indices of each variable's finite bounds
    for j in range(n):
        opts = []
        for bound in (lp.lower[j], lp.upper[j]):
            if math.isfinite(bound):
                opts.append(len(planes))
                planes.append(eye[j])
                plane_rhs.append(bound)
        if opts:
            bound_opts.append(opts)
    n_free = n - len(eq_rows)
    if n_free < 0:
        # over-determined equalities: use every n-subset of them
        planes, plane_rhs = eq_rows, eq_rhs
        eq_rows, eq_rhs, n_free = [], [], n
        n_rows, bound_opts = len(planes), []
    # a vertex never uses both bounds of one variable, so count and enumerate
    # row subsets times one bound per chosen variable
    esym = [1] + [0] * len(bound_opts)
    for opts in bound_opts:
        for k in range(len(bound_opts), 0, -1):
            esym[k] += esym[k - 1] * len(opts)
    n_combos = sum(math.comb(n_rows, r) * esym[n_free - r]
                   for r in range(min(n_rows, n_free) + 1) if n_free - r <= len(bound_opts))
    if n_combos > VERTEX_ORACLE_MAX_COMBOS:
        raise TooLarge(f"{n_combos} hyperplane combinations exceeds the cap")
    P, pr = _unit_rows(planes, plane_rhs, n)
    E, er = _unit_rows(eq_rows, eq_rhs, n)

    def combinations():
        for r in range(min(n_rows, n_free) + 1):
            for rows in itertools.combinations(range(n_rows), r):
                for chosen in itertools.combinations(bound_opts, n_free - r):
                    for pick in itertools.product(*chosen):
                        yield rows + pick

    best_x, best_obj = None, INF
    combos = combinations()
    chunk = 20000
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        idx = np.array(block, dtype=int).reshape(len(block), n_free)
        mats = np.concatenate([np.broadcast_to(E, (len(block),) + E.shape), P[idx]], axis=1)
        rhs = np.concatenate([np.broadcast_to(er, (len(block), er.size)), pr[idx]], axis=1)
        ok = np.abs(np.linalg.det(mats)) > 1e-10
        if not ok.any():
            continue
        xs = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
        slack = tol * (1.0 + np.max(np.abs(xs), axis=1, initial=0.0))
        act = xs @ A.T
        feas = np.all(xs >= lp.lower - slack[:, None], axis=1)
        feas &= np.all(xs <= lp.upper + slack[:, None], axis=1)
        feas &= np.all(act >= row_lo - slack[:, None], axis=1)
        feas &= np.all(act <= row_hi + slack[:, None], axis=1)
        if not feas.any():
            continue
        objs = xs[feas] @ lp.objective
        k = int(np.argmin(objs))
        if objs[k] < best_obj - 1e-12 * (1 + abs(objs[k])):
            best_obj, best_x = float(objs[k]), xs[feas][k]
    if best_x is None:
        return LpSolution(LpStatus.INFEASIBLE)
    return LpSolution(LpStatus.OPTIMAL, primal=best_x, duals=np.zeros(0), objective=best_obj)
