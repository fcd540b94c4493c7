"""Security-constrained unit commitment models.

Variables per step ``t`` (1-based): commitment ``z``, startup ``u`` and
shutdown ``v`` (binary), dispatch ``g[t, k]`` for every contingency
``k = 0..n_k`` and reserve ``r``.  Startup and shutdown variables exist only
at steps that have a previous commitment to compare with; reserve only when
the case enables it.

Row groups are tuples whose first entry names the family: ``balance``,
``line``, ``ramp``, ``contingency``, ``gencap``, ``resgencap``, ``startup``,
``shutdown``, ``minon``, ``minoff``.  Scenario rows are tagged
``("scenario", i, family, ...)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .case import GridCase, PtdfTables, build_ptdf
from .lp import INF, LpBuilder, Sense
from .milp import MilpOptions, MixedIntegerProgram
from .reduction import ScenarioProblemOracle, ScenarioProgram, SubsetSolution

if TYPE_CHECKING:
    from .stochastic import ScenarioRealization, ScenarioSet

FEASIBILITY_TOL = 1e-6
FIRST_STAGE_FAMILIES = frozenset({"startup", "shutdown", "minon", "minoff"})


class FirstStageInfeasible(ValueError):
    """Commitment, startup and shutdown decisions violate the logic constraints."""


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ScucLayout:
    """Variable indices; ``-1`` marks a variable that does not exist."""

    z: np.ndarray  # (n_t, n_g)
    u: np.ndarray  # (n_t, n_g)
    v: np.ndarray  # (n_t, n_g)
    g: np.ndarray  # (n_t, n_k + 1, n_g)
    r: np.ndarray  # (n_t, n_g)

    def take(self, x: np.ndarray, name: str) -> np.ndarray:
        idx = getattr(self, name)
        out = np.zeros(idx.shape)
        mask = idx >= 0
        out[mask] = x[idx[mask]]
        return out


@dataclass
class UcSolution:
    z: np.ndarray
    u: np.ndarray
    v: np.ndarray
    g: np.ndarray
    r: np.ndarray
    objective: float

    @classmethod
    def from_primal(cls, layout: ScucLayout, x, objective: float) -> "UcSolution":
        x = np.asarray(x, dtype=float)
        bins = {n: np.round(layout.take(x, n)).astype(int) for n in ("z", "u", "v")}
        return cls(g=layout.take(x, "g"), r=layout.take(x, "r"), objective=float(objective),
                   **bins)

    def to_dict(self) -> dict:
        return {"objective": self.objective, "z": self.z.tolist(), "u": self.u.tolist(),
                "v": self.v.tolist(), "g": self.g.tolist(), "r": self.r.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "UcSolution":
        return cls(np.asarray(d["z"], int), np.asarray(d["u"], int), np.asarray(d["v"], int),
                   np.asarray(d["g"], float), np.asarray(d["r"], float), float(d["objective"]))


@dataclass(frozen=True)
class ScucModel:
    case: GridCase
    ptdf: PtdfTables
    program: ScenarioProgram
    layout: ScucLayout
    names: tuple[str, ...]

    @property
    def mip(self) -> MixedIntegerProgram:
        return self.program.mip

    def primal_from(self, z, u=None, v=None) -> np.ndarray:
        """Primal vector with the binaries set from a schedule and all else zero."""
        L = self.layout
        x = np.zeros(self.mip.relaxation.n_vars)
        z = np.asarray(z, dtype=float)
        if z.shape != L.z.shape:
            raise DimensionMismatch(f"z has shape {z.shape}, expected {L.z.shape}")
        x[L.z.ravel()] = z.ravel()
        zprev = self._previous_z(z)
        for name, val, default in (("u", u, np.maximum(z - zprev, 0)),
                                   ("v", v, np.maximum(zprev - z, 0))):
            idx = getattr(L, name)
            arr = default if val is None else np.asarray(val, dtype=float)
            if arr.shape != idx.shape:
                raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {idx.shape}")
            m = idx >= 0
            x[idx[m]] = arr[m]
        return x

    def _previous_z(self, z) -> np.ndarray:
        prev = np.zeros_like(z)
        prev[1:] = z[:-1]
        if self.case.has_initial_state:
            prev[0] = [g.initial_on for g in self.case.generators]
        else:
            prev[0] = z[0]
        return prev

    def export_rows(self) -> str:
        """Plain-text model listing: one line per variable, then one per row."""
        lp = self.mip.relaxation
        out = [f"# {lp.n_vars} variables, {lp.n_rows} rows"]
        for j, name in enumerate(self.names):
            kind = "bin" if j in self.mip.binary_mask else "cont"
            out.append(f"var {name} {kind} [{lp.lower[j]:g}, {lp.upper[j]:g}] cost {lp.objective[j]:g}")
        A = lp.matrix
        for i in range(lp.n_rows):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            terms = " ".join(f"{A.data[p]:+g}*{self.names[A.indices[p]]}" for p in range(lo, hi))
            out.append(f"row {lp.groups[i]} : {terms} {lp.senses[i].value} {lp.rhs[i]:g}")
        return "\n".join(out) + "\n"


def _scenario_arrays(case: GridCase, scenarios) -> tuple[np.ndarray, np.ndarray]:
    n_t, n_w, n_d = case.horizon, len(case.wind_farms), len(case.loads)
    if scenarios is None:
        return np.zeros((0, n_t, n_w)), np.zeros((0, n_t, n_d))
    w = np.asarray(scenarios.wind, dtype=float)
    d = np.asarray(scenarios.load, dtype=float)
    if w.shape[1:] != (n_t, n_w) or d.shape[1:] != (n_t, n_d) or len(w) != len(d):
        raise DimensionMismatch("scenario errors do not match the case dimensions")
    return w, d


def build_model(case: GridCase, scenarios: "ScenarioSet | None" = None,
                ptdf: PtdfTables | None = None) -> ScucModel:
    """d-SCUC rows plus, for each scenario, balance and line rows at the realized
    wind and load for every step and contingency."""
    ptdf = ptdf or build_ptdf(case)
    werr, derr = _scenario_arrays(case, scenarios)
    n_t, n_g, n_k = case.horizon, case.n_g, case.n_k
    gens = case.generators
    avail = case.availability()
    weights = case.weights()
    initial = case.has_initial_state
    b = LpBuilder()

    z = np.full((n_t, n_g), -1)
    u = np.full((n_t, n_g), -1)
    v = np.full((n_t, n_g), -1)
    g = np.full((n_t, n_k + 1, n_g), -1)
    r = np.full((n_t, n_g), -1)
    for t in range(n_t):
        for i, gen in enumerate(gens):
            z[t, i] = b.add_var(f"z[{t + 1},{i + 1}]", 0, 1, gen.no_load_cost, binary=True)
            if t > 0 or initial:
                u[t, i] = b.add_var(f"u[{t + 1},{i + 1}]", 0, 1, gen.startup_cost, binary=True)
                v[t, i] = b.add_var(f"v[{t + 1},{i + 1}]", 0, 1, gen.shutdown_cost, binary=True)
            for k in range(n_k + 1):
                g[t, k, i] = b.add_var(f"g[{t + 1},{k},{i + 1}]", 0, gen.g_max,
                                       weights[k] * gen.cost)
            if case.reserve:
                r[t, i] = b.add_var(f"r[{t + 1},{i + 1}]", 0, gen.g_max, gen.reserve_cost)

    wf, df = case.wind_forecast(), case.load_forecast()
    lines = case.lines
    f_hi = np.array([ln.upper for ln in lines])
    f_lo = np.array([ln.lower for ln in lines])

    def network_rows(tag, t, wind, load):
        """Balance and line rows for all contingencies at one step."""
        net = float(load.sum() - wind.sum())
        shift = ptdf.H_w @ wind - ptdf.H_d @ load
        for k in range(n_k + 1):
            b.add_row({g[t, k, i]: 1.0 for i in range(n_g)}, Sense.GE, net,
                      (*tag, "balance", t + 1, k))
            for l in range(len(lines)):
                coeffs = {g[t, k, i]: ptdf.H_g[l, i] for i in range(n_g)}
                if np.isfinite(f_hi[l]):
                    b.add_row(coeffs, Sense.LE, f_hi[l] - shift[l], (*tag, "line", t + 1, k, l + 1, "max"))
                if np.isfinite(f_lo[l]):
                    b.add_row(coeffs, Sense.GE, f_lo[l] - shift[l], (*tag, "line", t + 1, k, l + 1, "min"))

    row_scenario = []
    for t in range(n_t):
        network_rows((), t, wf[t], df[t])
        for k in range(n_k + 1):
            a = avail[k]
            for i, gen in enumerate(gens):
                # ramp limits, with the initial output seen through a^k at t = 1
                prev = None
                if t > 0:
                    prev = {g[t - 1, k, i]: -1.0}
                elif initial:
                    prev = a[i] * gen.initial_output
                if prev is not None and (gen.ramp_up is not None or gen.ramp_down is not None):
                    coeffs = {g[t, k, i]: 1.0}
                    const = 0.0
                    if isinstance(prev, dict):
                        coeffs.update(prev)
                    else:
                        const = prev
                    if gen.ramp_up is not None:
                        b.add_row(coeffs, Sense.LE, a[i] * gen.ramp_up + const, ("ramp", t + 1, k, i + 1, "up"))
                    if gen.ramp_down is not None:
                        b.add_row(coeffs, Sense.GE, -a[i] * gen.ramp_down + const, ("ramp", t + 1, k, i + 1, "down"))
                if k >= 1:
                    lo = {g[t, k, i]: 1.0, g[t, 0, i]: -a[i]}
                    hi = {g[t, k, i]: 1.0, g[t, 0, i]: -a[i]}
                    if case.reserve:
                        lo[r[t, i]] = a[i]
                        hi[r[t, i]] = -a[i]
                    b.add_row(lo, Sense.GE, 0.0, ("contingency", t + 1, k, i + 1, "min"))
                    b.add_row(hi, Sense.LE, 0.0, ("contingency", t + 1, k, i + 1, "max"))
        for i, gen in enumerate(gens):
            b.add_row({g[t, 0, i]: 1.0, z[t, i]: -gen.g_min}, Sense.GE, 0.0, ("gencap", t + 1, i + 1, "min"))
            b.add_row({g[t, 0, i]: 1.0, z[t, i]: -gen.g_max}, Sense.LE, 0.0, ("gencap", t + 1, i + 1, "max"))
            if case.reserve:
                b.add_row({g[t, 0, i]: 1.0, r[t, i]: -1.0, z[t, i]: -gen.g_min}, Sense.GE, 0.0,
                          ("resgencap", t + 1, i + 1, "min"))
                b.add_row({g[t, 0, i]: 1.0, r[t, i]: 1.0, z[t, i]: -gen.g_max}, Sense.LE, 0.0,
                          ("resgencap", t + 1, i + 1, "max"))
            if u[t, i] >= 0:
                if t > 0:
                    zp, zp_const = {z[t - 1, i]: 1.0}, 0.0
                else:
                    zp, zp_const = {}, float(gen.initial_on)
                b.add_row({**zp, z[t, i]: -1.0, u[t, i]: 1.0}, Sense.GE, -zp_const, ("startup", t + 1, i + 1))
                b.add_row({**{j: -c for j, c in zp.items()}, z[t, i]: 1.0, v[t, i]: 1.0}, Sense.GE,
                          zp_const, ("shutdown", t + 1, i + 1))
    for i, gen in enumerate(gens):
        for t in range(1, n_t):
            for iota in range(t + 1, min(t + gen.min_on - 1, n_t - 1) + 1):
                b.add_row({z[t, i]: 1.0, z[t - 1, i]: -1.0, z[iota, i]: -1.0}, Sense.LE, 0.0,
                          ("minon", i + 1, t + 1, iota + 1))
            for iota in range(t + 1, min(t + gen.min_off - 1, n_t - 1) + 1):
                b.add_row({z[t - 1, i]: 1.0, z[t, i]: -1.0, z[iota, i]: 1.0}, Sense.LE, 1.0,
                          ("minoff", i + 1, t + 1, iota + 1))
    row_scenario.extend([0] * len(b.rhs))
    for s in range(len(werr)):
        start = len(b.rhs)
        for t in range(n_t):
            network_rows(("scenario", s + 1), t, wf[t] + werr[s, t], df[t] + derr[s, t])
        row_scenario.extend([s + 1] * (len(b.rhs) - start))

    lp = b.build()
    mip = MixedIntegerProgram(lp, frozenset(b.binary))
    program = ScenarioProgram(mip, np.array(row_scenario, dtype=int), len(werr))
    return ScucModel(case, ptdf, program, ScucLayout(z, u, v, g, r), tuple(b.names))


def build_dscuc(case: GridCase) -> MixedIntegerProgram:
    return build_model(case).mip


class ScucOracle(ScenarioProblemOracle):
    """Scenario problem oracle for s-SCUC that also decodes solutions."""

    def __init__(self, model: ScucModel, options: MilpOptions = MilpOptions(), **kw):
        super().__init__(model.program, options, **kw)
        self.model = model

    def uc_solution(self, sol: SubsetSolution) -> UcSolution:
        if sol.solution is None:
            raise ValueError("subset problem has no solution")
        return UcSolution.from_primal(self.model.layout, sol.solution, sol.objective)


def build_sscuc(case: GridCase, scenarios: "ScenarioSet | None",
                options: MilpOptions = MilpOptions(), ptdf: PtdfTables | None = None,
                **oracle_kw) -> ScucOracle:
    return ScucOracle(build_model(case, scenarios, ptdf), options, **oracle_kw)


def first_stage_residual(model: ScucModel, x: np.ndarray) -> float:
    """Largest violation of the startup, shutdown and minimum up/down rows."""
    lp = model.mip.relaxation
    rows = lp.rows_in_group(lambda tag: bool(tag) and tag[0] in FIRST_STAGE_FAMILIES)
    if rows.size == 0:
        return 0.0
    return float(np.max(lp.residuals(x)[rows], initial=0.0))


def fix_first_stage(case: GridCase, scenarios: "ScenarioSet | None", z, u=None, v=None,
                    model: ScucModel | None = None) -> ScenarioProgram:
    """Second-stage LP family over ``(g, r)`` for a fixed schedule.

    Missing ``u``/``v`` default to the smallest values consistent with ``z``.
    """
    model = model or build_model(case, scenarios)
    x = model.primal_from(z, u, v)
    b = model.mip.binaries
    if np.any(np.abs(x[b] - np.round(x[b])) > 1e-9):
        raise FirstStageInfeasible("commitment decisions must be 0 or 1")
    if first_stage_residual(model, x) > FEASIBILITY_TOL:
        raise FirstStageInfeasible("schedule violates startup/shutdown or minimum up/down rows")
    return model.program.fix_binaries(x)


# --------------------------------------------------------------------------
# Out-of-sample feasibility
# --------------------------------------------------------------------------


@dataclass
class ViolationReport:
    violated: bool
    balance_violated: bool
    line_violated: bool
    worst_balance: float
    worst_line: float


@dataclass
class BatchViolations:
    balance: np.ndarray
    line: np.ndarray
    worst_balance: np.ndarray
    worst_line: np.ndarray

    @property
    def any(self) -> np.ndarray:
        return self.balance | self.line


def _check_dims(case: GridCase, sol: UcSolution) -> None:
    want = (case.horizon, case.n_k + 1, case.n_g)
    if np.shape(sol.g) != want:
        raise DimensionMismatch(f"dispatch has shape {np.shape(sol.g)}, expected {want}")


def batch_violations(case: GridCase, sol: UcSolution, wind_err: np.ndarray, load_err: np.ndarray,
                     ptdf: PtdfTables | None = None, tol: float = FEASIBILITY_TOL) -> BatchViolations:
    """Balance and line checks for ``m`` realizations at once.

    ``wind_err`` is ``(m, n_t, n_w)`` and ``load_err`` is ``(m, n_t, n_d)``.
    """
    _check_dims(case, sol)
    ptdf = ptdf or build_ptdf(case)
    w = case.wind_forecast()[None] + np.asarray(wind_err, dtype=float)
    d = case.load_forecast()[None] + np.asarray(load_err, dtype=float)
    if w.shape[1:] != case.wind_forecast().shape or d.shape[1:] != case.load_forecast().shape:
        raise DimensionMismatch("realization does not match the case dimensions")
    g = np.asarray(sol.g, dtype=float)
    # balance: worst contingency per step
    supply = g.sum(axis=2).min(axis=1)                       # (n_t,)
    short = d.sum(axis=2) - w.sum(axis=2) - supply[None]     # (m, n_t)
    worst_balance = np.maximum(short.max(axis=1), 0.0)
    # line flows: generator part per (t, k), uncertain part per (m, t)
    fg = np.einsum("lg,tkg->tkl", ptdf.H_g, g)
    fu = np.einsum("lw,mtw->mtl", ptdf.H_w, w) - np.einsum("ld,mtd->mtl", ptdf.H_d, d)
    hi = np.array([ln.upper for ln in case.lines])
    lo = np.array([ln.lower for ln in case.lines])
    if len(case.lines):
        flow = fg[None] + fu[:, :, None, :]                  # (m, n_t, n_k+1, n_l)
        excess = np.maximum(flow - hi, lo - flow)
        worst_line = np.maximum(excess.reshape(len(w), -1).max(axis=1), 0.0)
    else:
        worst_line = np.zeros(len(w))
    return BatchViolations(worst_balance > tol, worst_line > tol, worst_balance, worst_line)


def check_solution_feasible(case: GridCase, solution: UcSolution,
                            realization: "ScenarioRealization",
                            ptdf: PtdfTables | None = None,
                            tol: float = FEASIBILITY_TOL) -> ViolationReport:
    res = batch_violations(case, solution, np.asarray(realization.wind)[None],
                           np.asarray(realization.load)[None], ptdf, tol)
    return ViolationReport(bool(res.any[0]), bool(res.balance[0]), bool(res.line[0]),
                           float(res.worst_balance[0]), float(res.worst_line[0]))
