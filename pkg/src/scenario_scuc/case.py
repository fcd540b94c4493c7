"""Grid case data, JSON case files and DC shift factors.

Case file conventions (``schema_version`` 1):

* power in MW, reactance in per unit on ``base_mva``, costs in $ per MWh,
  MW or event;
* ``null`` for a line capacity or a ramp limit means unlimited;
* ``min_flow`` defaults to ``-capacity``;
* contingency 0 (nothing out, weight ``base_weight``) is implicit; the
  ``contingencies`` list holds the outage cases ``k >= 1``;
* ``initial_on`` / ``initial_output`` may be omitted together, in which case
  no constraint links the first step to a previous one;
* ``scenario_table`` optionally lists explicit forecast errors:
  ``{"wind": [...], "load": [...]}`` with one ``n_t x n_sources`` block per
  scenario.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

SCHEMA_VERSION = 1


class InvalidCase(ValueError):
    """Case data violates a structural requirement."""


class CaseParseError(InvalidCase):
    """A case file is not valid JSON; carries the line and column."""

    def __init__(self, msg: str, line: int = 0, column: int = 0):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line, self.column = line, column


class DisconnectedNetwork(InvalidCase):
    pass


class SingularSusceptanceMatrix(InvalidCase):
    pass


def _opt_float(v):
    return None if v is None else float(v)


def _inf_if_none(v):
    return math.inf if v is None else v


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float
    capacity: float | None = None
    min_flow: float | None = None

    @property
    def upper(self) -> float:
        return _inf_if_none(self.capacity)

    @property
    def lower(self) -> float:
        if self.min_flow is not None:
            return self.min_flow
        return -self.upper


@dataclass(frozen=True)
class Generator:
    bus: int
    g_min: float
    g_max: float
    cost: float = 0.0
    no_load_cost: float = 0.0
    startup_cost: float = 0.0
    shutdown_cost: float = 0.0
    reserve_cost: float = 0.0
    ramp_up: float | None = None
    ramp_down: float | None = None
    min_on: int = 1
    min_off: int = 1
    initial_on: int | None = None
    initial_output: float | None = None


@dataclass(frozen=True)
class Injection:
    """A wind farm or a load: a bus and a forecast per time step."""

    bus: int
    forecast: tuple[float, ...]


@dataclass(frozen=True)
class Contingency:
    availability: tuple[int, ...]
    weight: float = 0.0


@dataclass(frozen=True)
class GridCase:
    buses: tuple[int, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    wind_farms: tuple[Injection, ...]
    loads: tuple[Injection, ...]
    horizon: int
    slack_bus: int
    contingencies: tuple[Contingency, ...] = ()
    base_weight: float = 1.0
    reserve: bool = True
    base_mva: float = 100.0
    name: str = "case"
    scenario_table: dict | None = field(default=None, compare=False)
    distribution: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        validate_case(self)

    @property
    def n_g(self) -> int:
        return len(self.generators)

    @property
    def n_k(self) -> int:
        return len(self.contingencies)

    @property
    def has_initial_state(self) -> bool:
        return all(g.initial_on is not None for g in self.generators) and self.n_g > 0

    def availability(self) -> np.ndarray:
        """``(n_k + 1) x n_g`` availability matrix, row 0 all ones."""
        rows = [np.ones(self.n_g)] + [np.asarray(c.availability, float) for c in self.contingencies]
        return np.vstack(rows) if self.n_g else np.zeros((self.n_k + 1, 0))

    def weights(self) -> np.ndarray:
        return np.array([self.base_weight] + [c.weight for c in self.contingencies])

    def wind_forecast(self) -> np.ndarray:
        return np.array([w.forecast for w in self.wind_farms], float).reshape(-1, self.horizon).T

    def load_forecast(self) -> np.ndarray:
        return np.array([d.forecast for d in self.loads], float).reshape(-1, self.horizon).T

    def replace(self, **changes) -> "GridCase":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return GridCase(**data)


def validate_case(case: GridCase) -> None:
    buses = set(case.buses)
    if len(buses) != len(case.buses):
        raise InvalidCase("duplicate bus labels")
    if case.slack_bus not in buses:
        raise InvalidCase(f"slack bus {case.slack_bus} is not a bus")
    if case.horizon < 1:
        raise InvalidCase("horizon must be at least 1")
    for i, ln in enumerate(case.lines):
        if ln.from_bus not in buses or ln.to_bus not in buses:
            raise InvalidCase(f"line {i + 1} references an unknown bus")
        if ln.from_bus == ln.to_bus:
            raise InvalidCase(f"line {i + 1} is a self-loop")
        if not ln.reactance > 0:
            raise InvalidCase(f"line {i + 1} needs a positive reactance")
        if ln.lower > ln.upper:
            raise InvalidCase(f"line {i + 1} has min_flow above capacity")
    partial = {g.initial_on is None for g in case.generators}
    if len(partial) > 1:
        raise InvalidCase("initial state must be given for all generators or none")
    for i, g in enumerate(case.generators):
        if g.bus not in buses:
            raise InvalidCase(f"generator {i + 1} references an unknown bus")
        if not 0 <= g.g_min <= g.g_max:
            raise InvalidCase(f"generator {i + 1} needs 0 <= g_min <= g_max")
        if g.min_on < 1 or g.min_off < 1:
            raise InvalidCase(f"generator {i + 1} needs min_on, min_off >= 1")
        for name in ("ramp_up", "ramp_down"):
            v = getattr(g, name)
            if v is not None and v < 0:
                raise InvalidCase(f"generator {i + 1}: {name} is a non-negative magnitude")
        if g.initial_on is not None:
            if g.initial_on not in (0, 1) or g.initial_output is None:
                raise InvalidCase(f"generator {i + 1} needs initial_on in {{0,1}} and initial_output")
    for kind, items in (("wind farm", case.wind_farms), ("load", case.loads)):
        for i, s in enumerate(items):
            if s.bus not in buses:
                raise InvalidCase(f"{kind} {i + 1} references an unknown bus")
            if len(s.forecast) != case.horizon:
                raise InvalidCase(f"{kind} {i + 1} forecast length differs from horizon")
    for k, c in enumerate(case.contingencies, start=1):
        if len(c.availability) != case.n_g or any(a not in (0, 1) for a in c.availability):
            raise InvalidCase(f"contingency {k} needs a 0/1 availability per generator")
        if c.weight < 0:
            raise InvalidCase(f"contingency {k} has a negative weight")
    if case.base_weight < 0:
        raise InvalidCase("base_weight must be non-negative")


# --------------------------------------------------------------------------
# JSON round trip
# --------------------------------------------------------------------------


def case_to_dict(case: GridCase) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "name": case.name,
        "base_mva": case.base_mva,
        "horizon": case.horizon,
        "slack_bus": case.slack_bus,
        "reserve": case.reserve,
        "base_weight": case.base_weight,
        "buses": list(case.buses),
        "lines": [asdict(x) for x in case.lines],
        "generators": [asdict(x) for x in case.generators],
        "wind_farms": [{"bus": w.bus, "forecast": list(w.forecast)} for w in case.wind_farms],
        "loads": [{"bus": d.bus, "forecast": list(d.forecast)} for d in case.loads],
        "contingencies": [{"availability": list(c.availability), "weight": c.weight}
                          for c in case.contingencies],
    }
    if case.scenario_table is not None:
        out["scenario_table"] = case.scenario_table
    if case.distribution is not None:
        out["distribution"] = case.distribution
    return out


def _build(cls, d: dict, where: str):
    names = set(cls.__dataclass_fields__)
    unknown = set(d) - names
    if unknown:
        raise InvalidCase(f"{where}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise InvalidCase(f"{where}: {exc}") from None


def case_from_dict(d: dict) -> GridCase:
    if not isinstance(d, dict):
        raise InvalidCase("case must be a JSON object")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InvalidCase(f"unsupported schema_version {version}")
    try:
        lines = tuple(_build(Line, {**x}, f"lines[{i}]") for i, x in enumerate(d["lines"]))
        gens = tuple(_build(Generator, {**x}, f"generators[{i}]")
                     for i, x in enumerate(d["generators"]))
        wind = tuple(Injection(int(x["bus"]), tuple(float(v) for v in x["forecast"]))
                     for x in d.get("wind_farms", []))
        loads = tuple(Injection(int(x["bus"]), tuple(float(v) for v in x["forecast"]))
                      for x in d.get("loads", []))
        conts = tuple(Contingency(tuple(int(a) for a in x["availability"]),
                                  float(x.get("weight", 0.0)))
                      for x in d.get("contingencies", []))
        return GridCase(
            buses=tuple(int(b) for b in d["buses"]), lines=lines, generators=gens,
            wind_farms=wind, loads=loads, horizon=int(d["horizon"]),
            slack_bus=int(d["slack_bus"]), contingencies=conts,
            base_weight=float(d.get("base_weight", 1.0)), reserve=bool(d.get("reserve", True)),
            base_mva=float(d.get("base_mva", 100.0)), name=str(d.get("name", "case")),
            scenario_table=d.get("scenario_table"), distribution=d.get("distribution"))
    except KeyError as exc:
        raise InvalidCase(f"missing field {exc}") from None


def parse_json(text: str, what: str = "document"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"{what} is not valid JSON: {exc.msg}", exc.lineno, exc.colno) from None


def load_case(path) -> GridCase:
    return case_from_dict(parse_json(Path(path).read_text(), str(path)))


def save_case(case: GridCase, path) -> None:
    Path(path).write_text(json.dumps(case_to_dict(case), indent=2) + "\n")


def bundled_case_path(name: str) -> Path:
    return Path(__file__).with_name("data") / name


# --------------------------------------------------------------------------
# Shift factors
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PtdfTables:
    """Line flows per unit injection at each bus, generator, wind farm and load.

    The slack bus absorbs every imbalance, so its column is zero.
    """

    bus: np.ndarray
    H_g: np.ndarray
    H_w: np.ndarray
    H_d: np.ndarray

    def flows(self, g, w, d) -> np.ndarray:
        return self.H_g @ g + self.H_w @ w - self.H_d @ d


def build_ptdf(case: GridCase) -> PtdfTables:
    nb, nl = len(case.buses), len(case.lines)
    index = {b: i for i, b in enumerate(case.buses)}
    f = np.array([index[ln.from_bus] for ln in case.lines], dtype=int)
    t = np.array([index[ln.to_bus] for ln in case.lines], dtype=int)
    b = np.array([1.0 / ln.reactance for ln in case.lines])
    if nb > 1:
        adj = sp.csr_matrix((np.ones(nl), (f, t)), shape=(nb, nb))
        n_comp, _ = connected_components(adj, directed=False)
        if n_comp > 1:
            raise DisconnectedNetwork(f"network splits into {n_comp} islands")
    # branch-bus incidence and nodal susceptance
    C = np.zeros((nl, nb))
    C[np.arange(nl), f] = 1.0
    C[np.arange(nl), t] = -1.0
    Bf = b[:, None] * C
    B = C.T @ Bf
    s = index[case.slack_bus]
    keep = np.array([i for i in range(nb) if i != s], dtype=int)
    bus = np.zeros((nl, nb))
    if keep.size:
        Br = B[np.ix_(keep, keep)]
        if np.linalg.cond(Br) > 1e12:
            raise SingularSusceptanceMatrix("reduced susceptance matrix is singular")
        bus[:, keep] = np.linalg.solve(Br.T, Bf[:, keep].T).T
    cols = lambda items: np.array([index[x.bus] for x in items], dtype=int)
    return PtdfTables(bus, bus[:, cols(case.generators)], bus[:, cols(case.wind_farms)],
                      bus[:, cols(case.loads)])
