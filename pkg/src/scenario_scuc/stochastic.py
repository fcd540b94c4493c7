"""Forecast-error sampling, out-of-sample violation estimates and the
Monte-Carlo experiment loop.

Random streams use numpy's Philox4x64 counter-based generator seeded by
``SeedSequence(seed, spawn_key=stream)``, where ``stream`` is a tuple such as
``(purpose, N, trial)``.  The same ``(seed, stream)`` gives the same numbers on
every platform for a given numpy release.

Default error model: zero-mean Gaussian, standard deviation 10% of each
forecast, truncated at +-3 standard deviations by resampling the whole draw,
independent across sources and steps.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import fmean

import numpy as np
from scipy.special import ndtr

from .case import GridCase, PtdfTables, build_ptdf, case_to_dict
from .milp import OBJECTIVE_RTOL, MilpOptions, NodeLimitExceeded
from .reduction import Degeneracy, PreconditionWarning, two_stage_essential
from .scuc import UcSolution, batch_violations, build_sscuc
from .theory import DomainError, certify

PURPOSE_SCENARIOS = 1
PURPOSE_OUT_OF_SAMPLE = 2
OOS_CHUNK = 20_000
CSV_SCHEMA_VERSION = 1


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class ErrorModel:
    """Error law for one source type, scaled by each source's forecast.

    ``gaussian``: standard deviation ``sigma * forecast``; ``truncation`` is in
    standard deviations and enforced by resampling.  ``uniform``: errors in
    ``[low * forecast, high * forecast]``.
    """

    kind: str = "gaussian"
    sigma: float = 0.1
    truncation: tuple[float, float] | None = (-3.0, 3.0)
    low: float = -0.1
    high: float = 0.1

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise InvalidSpec(f"unknown error kind {self.kind!r}")
        if self.sigma < 0:
            raise InvalidSpec("sigma must be non-negative")
        if self.truncation is not None:
            lo, hi = self.truncation
            if lo > hi or lo > 0 or hi < 0:
                raise InvalidSpec("truncation needs lo <= 0 <= hi")
            object.__setattr__(self, "truncation", (float(lo), float(hi)))
        if self.low > self.high:
            raise InvalidSpec("uniform bounds need low <= high")


@dataclass(frozen=True)
class DistributionSpec:
    """Joint law of wind and load forecast errors.

    ``kind="parametric"`` uses the per-type :class:`ErrorModel`; a
    ``correlation`` coefficient ``rho`` mixes one shared standard normal
    factor into every component (Gaussian copula for uniform errors).
    ``kind="empirical"`` draws rows of ``table``: in listed order with
    ``order="identity"`` (at most ``len(table)`` draws) or uniformly with
    replacement with ``order="resample"``.
    """

    kind: str = "parametric"
    wind: ErrorModel = ErrorModel()
    load: ErrorModel = ErrorModel()
    correlation: float = 0.0
    table: dict | None = field(default=None, compare=False)
    order: str = "identity"

    def __post_init__(self):
        if self.kind not in ("parametric", "empirical"):
            raise InvalidSpec(f"unknown distribution kind {self.kind!r}")
        if not 0.0 <= self.correlation <= 1.0:
            raise InvalidSpec("correlation must lie in [0, 1]")
        if self.kind == "empirical":
            if not self.table or not self.table.get("wind") and not self.table.get("load"):
                raise InvalidSpec("empirical spec needs a nonempty table")
            if self.order not in ("identity", "resample"):
                raise InvalidSpec("order must be 'identity' or 'resample'")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "correlation": self.correlation}
        if self.kind == "parametric":
            d["wind"], d["load"] = asdict(self.wind), asdict(self.load)
        else:
            d["table"], d["order"] = self.table, self.order
        return d

    @classmethod
    def from_dict(cls, d: dict, case: GridCase | None = None) -> "DistributionSpec":
        d = dict(d)
        try:
            for key in ("wind", "load"):
                if key in d:
                    m = dict(d[key])
                    if m.get("truncation") is not None:
                        m["truncation"] = tuple(m["truncation"])
                    d[key] = ErrorModel(**m)
            if d.get("kind") == "empirical" and d.get("table") is None and case is not None:
                d["table"] = case.scenario_table
            return cls(**d)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from None

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def empirical_spec(case: GridCase, order: str = "identity") -> DistributionSpec:
    if case.scenario_table is None:
        raise InvalidSpec(f"case {case.name!r} has no scenario table")
    return DistributionSpec(kind="empirical", table=case.scenario_table, order=order)


@dataclass(frozen=True)
class ScenarioRealization:
    wind: np.ndarray  # (n_t, n_w)
    load: np.ndarray  # (n_t, n_d)


@dataclass(frozen=True)
class ScenarioSet:
    wind: np.ndarray  # (N, n_t, n_w)
    load: np.ndarray  # (N, n_t, n_d)
    seed: int | None = None
    spec_hash: str = ""

    def __len__(self) -> int:
        return len(self.wind)

    def __getitem__(self, i: int) -> ScenarioRealization:
        return ScenarioRealization(self.wind[i], self.load[i])

    def subset(self, idx) -> "ScenarioSet":
        idx = np.asarray(idx, dtype=int)
        return ScenarioSet(self.wind[idx], self.load[idx], self.seed, self.spec_hash)


def make_rng(seed: int, stream: tuple[int, ...] = ()) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=stream)))


def _table(spec: DistributionSpec, case: GridCase) -> tuple[np.ndarray, np.ndarray]:
    n_t, n_w, n_d = case.horizon, len(case.wind_farms), len(case.loads)
    tab = spec.table
    w = np.asarray(tab.get("wind") or np.zeros((0, n_t, n_w)), dtype=float)
    d = np.asarray(tab.get("load") or np.zeros((0, n_t, n_d)), dtype=float)
    if not len(w):
        w = np.zeros((len(d), n_t, n_w))
    if not len(d):
        d = np.zeros((len(w), n_t, n_d))
    if w.shape[1:] != (n_t, n_w) or d.shape[1:] != (n_t, n_d) or len(w) != len(d):
        raise InvalidSpec("empirical table does not match the case dimensions")
    return w, d


def _draw(spec: DistributionSpec, case: GridCase, n: int, rng: np.random.Generator):
    """``n`` joint draws as ``(wind, load)`` arrays."""
    n_t = case.horizon
    if spec.kind == "empirical":
        w, d = _table(spec, case)
        if spec.order == "identity":
            if n > len(w):
                raise InvalidSpec(f"identity order yields at most {len(w)} scenarios")
            idx = np.arange(n)
        else:
            idx = rng.integers(0, len(w), size=n)
        return w[idx], d[idx]

    fw, fd = case.wind_forecast(), case.load_forecast()
    scale = np.concatenate([fw.ravel(), fd.ravel()])
    n_wv = fw.size
    models = [spec.wind] * n_wv + [spec.load] * fd.size
    dim = scale.size
    rho = spec.correlation

    def normals(count):
        e = rng.standard_normal((count, dim))
        if rho > 0.0:
            f = rng.standard_normal((count, 1))
            e = math.sqrt(rho) * f + math.sqrt(1.0 - rho) * e
        return e

    lo = np.array([m.truncation[0] if m.kind == "gaussian" and m.truncation else -np.inf
                   for m in models])
    hi = np.array([m.truncation[1] if m.kind == "gaussian" and m.truncation else np.inf
                   for m in models])
    z = normals(n)
    bad = np.flatnonzero(np.any((z < lo) | (z > hi), axis=1))
    while bad.size:
        z[bad] = normals(bad.size)
        bad = bad[np.any((z[bad] < lo) | (z[bad] > hi), axis=1)]

    is_gauss = np.array([m.kind == "gaussian" for m in models])
    sigma = np.array([m.sigma for m in models])
    low = np.array([m.low for m in models])
    high = np.array([m.high for m in models])
    frac = np.where(is_gauss, sigma * z, low + (high - low) * ndtr(z))
    err = frac * scale
    return (err[:, :n_wv].reshape(n, n_t, fw.shape[1]),
            err[:, n_wv:].reshape(n, n_t, fd.shape[1]))


def sample_scenarios(spec: DistributionSpec, case: GridCase, n: int, seed: int,
                     stream: tuple[int, ...] = ()) -> ScenarioSet:
    if n < 0:
        raise InvalidSpec("scenario count must be non-negative")
    w, d = _draw(spec, case, n, make_rng(seed, (PURPOSE_SCENARIOS, *stream)))
    return ScenarioSet(w, d, seed, spec.digest())


@dataclass
class OutOfSampleReport:
    m_samples: int
    violation_count: int
    balance_count: int
    line_count: int

    @property
    def epsilon_hat(self) -> float:
        return self.violation_count / self.m_samples if self.m_samples else 0.0

    @property
    def half_width(self) -> float:
        """95% normal-approximation half-width of ``epsilon_hat``."""
        if not self.m_samples:
            return math.inf
        p = self.epsilon_hat
        return 1.959963984540054 * math.sqrt(p * (1.0 - p) / self.m_samples)

    def to_dict(self) -> dict:
        return {"m_samples": self.m_samples, "violation_count": self.violation_count,
                "balance_count": self.balance_count, "line_count": self.line_count,
                "epsilon_hat": self.epsilon_hat, "half_width": self.half_width}


def estimate_violation(case: GridCase, solution: UcSolution, spec: DistributionSpec,
                       m: int = 100_000, seed: int = 0, stream: tuple[int, ...] = (),
                       ptdf: PtdfTables | None = None) -> OutOfSampleReport:
    """Fraction of ``m`` fresh realizations under which the dispatch violates a
    balance or line constraint.  Empirical specs are resampled with
    replacement."""
    if spec.kind == "empirical" and spec.order == "identity":
        spec = DistributionSpec(kind="empirical", table=spec.table, order="resample")
    ptdf = ptdf or build_ptdf(case)
    rng = make_rng(seed, (PURPOSE_OUT_OF_SAMPLE, *stream))
    total = bal = line = 0
    done = 0
    while done < m:
        c = min(OOS_CHUNK, m - done)
        w, d = _draw(spec, case, c, rng)
        v = batch_violations(case, solution, w, d, ptdf)
        total += int(v.any.sum())
        bal += int(v.balance.sum())
        line += int(v.line.sum())
        done += c
    return OutOfSampleReport(m, total, bal, line)


# --------------------------------------------------------------------------
# Experiment loop
# --------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    case: GridCase
    spec: DistributionSpec
    n_grid: tuple[int, ...]
    trials: int = 10
    beta: float = 0.01
    m_oos: int = 100_000
    seed: int = 0
    node_limit: int = 100_000
    verify_degeneracy: bool = True
    tol_eq: float = OBJECTIVE_RTOL
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(n < 0 for n in self.n_grid):
            raise ValueError("scenario counts must be non-negative")
        if self.m_oos < 1:
            raise ValueError("m_oos must be at least 1")

    def to_dict(self) -> dict:
        return {"case": case_to_dict(self.case), "spec": self.spec.to_dict(),
                "n_grid": list(self.n_grid), "trials": self.trials, "beta": self.beta,
                "m_oos": self.m_oos, "seed": self.seed, "node_limit": self.node_limit,
                "verify_degeneracy": self.verify_degeneracy, "tol_eq": self.tol_eq}

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


CSV_COLUMNS = (
    "n_scenarios", "trial", "status", "objective", "set_kind", "set_size", "support_size",
    "degeneracy", "epsilon_posterior", "epsilon_hat", "half_width", "violations",
    "balance_violations", "line_violations", "milp_solves", "lp_solves", "dual_precondition", "error",
)


@dataclass
class TrialRow:
    n_scenarios: int
    trial: int
    status: str = "ok"
    objective: float | None = None
    set_kind: str = ""
    set_size: int | None = None
    support_size: int | None = None
    degeneracy: str = ""
    epsilon_posterior: float | None = None
    epsilon_hat: float | None = None
    half_width: float | None = None
    violations: int | None = None
    balance_violations: int | None = None
    line_violations: int | None = None
    milp_solves: int | None = None
    lp_solves: int | None = None
    dual_precondition: bool | None = None
    error: str = ""
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def exceeds_certificate(self) -> bool:
        return self.ok and self.epsilon_hat > self.epsilon_posterior

    def csv_record(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)
        return [fmt(getattr(self, c)) for c in CSV_COLUMNS]


def run_trial(config: ExperimentConfig, n: int, trial: int) -> TrialRow:
    row = TrialRow(n, trial)
    t0 = time.perf_counter()
    try:
        case = config.case
        ptdf = build_ptdf(case)
        scen = sample_scenarios(config.spec, case, n, config.seed, (n, trial))
        oracle = build_sscuc(case, scen, MilpOptions(node_limit=config.node_limit), ptdf=ptdf,
                             rtol=config.tol_eq)
        with warnings.catch_warnings():
            # recorded in the dual_precondition column instead
            warnings.simplefilter("ignore", PreconditionWarning)
            red = two_stage_essential(oracle, verify_degeneracy=config.verify_degeneracy)
        cert = certify(n, len(red.indices), config.beta)
        sol = oracle.uc_solution(oracle.solve(oracle.program.scenarios))
        oos = estimate_violation(case, sol, config.spec, config.m_oos, config.seed, (n, trial), ptdf)
        row.objective = red.full_objective
        row.set_kind = red.kind.value
        row.set_size = len(red.indices)
        row.support_size = None if red.second_stage_support is None else len(red.second_stage_support)
        row.degeneracy = red.degenerate.value
        row.epsilon_posterior = cert.epsilon
        row.epsilon_hat = oos.epsilon_hat
        row.half_width = oos.half_width
        row.violations = oos.violation_count
        row.balance_violations = oos.balance_count
        row.line_violations = oos.line_count
        row.milp_solves = red.solve_count
        row.lp_solves = red.lp_solve_count
        row.dual_precondition = red.precondition_ok
        if red.degenerate is Degeneracy.UNKNOWN:
            row.status = "node_limit"
    except DomainError as exc:
        row.status, row.error = "invalid", str(exc)
    except NodeLimitExceeded as exc:
        row.status, row.error = "node_limit", str(exc)
    except Exception as exc:  # a failed trial must not abort the sweep
        row.status, row.error = "failed", f"{type(exc).__name__}: {exc}"
    row.wall_time = time.perf_counter() - t0
    return row


def _run_trial_args(args):
    return run_trial(*args)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[TrialRow]

    @property
    def failed(self) -> list[TrialRow]:
        return [r for r in self.rows if not r.ok]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_record())
        return buf.getvalue()

    def summary(self) -> dict:
        per_n = {}
        for n in self.config.n_grid:
            rows = [r for r in self.rows if r.n_scenarios == n and r.ok]
            entry = {"trials_ok": len(rows),
                     "trials_failed": sum(1 for r in self.rows if r.n_scenarios == n and not r.ok)}
            if rows:
                for key in ("objective", "epsilon_hat", "epsilon_posterior", "set_size",
                            "milp_solves", "lp_solves", "wall_time"):
                    vals = [float(getattr(r, key)) for r in rows]
                    entry[key] = {"min": min(vals), "mean": fmean(vals), "max": max(vals)}
                entry["non_degenerate_rate"] = fmean(
                    [r.degeneracy == Degeneracy.NON_DEGENERATE.value for r in rows])
                entry["certificate_exceedance_rate"] = fmean([r.exceeds_certificate for r in rows])
            per_n[str(n)] = entry
        return {"csv_schema_version": CSV_SCHEMA_VERSION, "columns": list(CSV_COLUMNS),
                "error_model": self.config.spec.to_dict(), "beta": self.config.beta,
                "m_oos": self.config.m_oos, "per_n": per_n}

    def mean_by_n(self, key: str) -> list[float]:
        out = []
        for n in self.config.n_grid:
            vals = [float(getattr(r, key)) for r in self.rows if r.n_scenarios == n and r.ok]
            out.append(fmean(vals) if vals else math.nan)
        return out


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """For each ``N`` and trial: sample, solve s-SCUC, reduce the scenario set,
    certify, and estimate the out-of-sample violation probability."""
    jobs = [(config, n, t) for n in config.n_grid for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            rows = list(pool.map(_run_trial_args, jobs, chunksize=1))
    else:
        rows = [run_trial(*j) for j in jobs]
    return ExperimentReport(config, rows)
