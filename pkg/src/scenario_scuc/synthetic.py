"""Reproducible synthetic grid cases of arbitrary size.

The layout is a random spanning tree plus chords, so every case is connected.
Loads follow a two-peak daily profile; generator data are drawn from ranges
typical of thermal units.  Used for build-scale tests, not for calibrated
studies.
"""

from __future__ import annotations

import numpy as np

from .case import Contingency, Generator, GridCase, Injection, Line


def daily_profile(horizon: int) -> np.ndarray:
    h = np.arange(horizon) * 24.0 / horizon
    return 0.75 + 0.15 * np.exp(-((h - 11) / 3) ** 2) + 0.2 * np.exp(-((h - 19) / 2.5) ** 2)


def synthetic_case(n_bus: int = 118, n_gen: int = 54, horizon: int = 24, n_lines: int = 186,
                   n_wind: int = 3, n_contingencies: int = 2, seed: int = 118,
                   name: str | None = None) -> GridCase:
    if n_lines < n_bus - 1:
        raise ValueError("a connected network needs at least n_bus - 1 lines")
    rng = np.random.default_rng(seed)
    buses = tuple(range(1, n_bus + 1))
    edges = set()
    order = rng.permutation(n_bus) + 1
    for i in range(1, n_bus):
        a, b = int(order[i]), int(order[rng.integers(0, i)])
        edges.add((min(a, b), max(a, b)))
    while len(edges) < n_lines:
        a, b = (int(x) for x in rng.choice(n_bus, 2, replace=False) + 1)
        edges.add((min(a, b), max(a, b)))
    lines = tuple(Line(a, b, float(np.round(rng.uniform(0.02, 0.3), 4)),
                       float(rng.choice([175.0, 250.0, 400.0, 500.0])))
                  for a, b in sorted(edges))

    profile = daily_profile(horizon)
    load_buses = np.sort(rng.choice(n_bus, int(0.77 * n_bus), replace=False) + 1)
    peaks = rng.uniform(10.0, 90.0, len(load_buses))
    loads = tuple(Injection(int(b), tuple(float(np.round(p * f, 2)) for f in profile))
                  for b, p in zip(load_buses, peaks))
    total_peak = float(peaks.sum() * profile.max())

    gen_buses = rng.choice(n_bus, n_gen, replace=True) + 1
    sizes = rng.uniform(0.5, 1.5, n_gen)
    g_max = np.round(sizes / sizes.sum() * 1.6 * total_peak, 1)
    gens = []
    for j in range(n_gen):
        hi = float(g_max[j])
        gens.append(Generator(
            bus=int(gen_buses[j]), g_min=float(np.round(hi * rng.uniform(0.2, 0.4), 1)), g_max=hi,
            cost=float(np.round(rng.uniform(10.0, 60.0), 2)),
            no_load_cost=float(np.round(rng.uniform(50.0, 400.0), 1)),
            startup_cost=float(np.round(rng.uniform(100.0, 2000.0), 1)),
            shutdown_cost=0.0, reserve_cost=float(np.round(rng.uniform(1.0, 6.0), 2)),
            ramp_up=float(np.round(hi * 0.5, 1)), ramp_down=float(np.round(hi * 0.5, 1)),
            min_on=int(rng.integers(1, 6)), min_off=int(rng.integers(1, 6)),
            initial_on=1, initial_output=float(np.round(hi * 0.5, 1))))
    wind_buses = rng.choice(n_bus, n_wind, replace=False) + 1
    wind = tuple(Injection(int(b), tuple(float(np.round(x, 2)) for x in
                                         0.05 * total_peak * rng.uniform(0.5, 1.0, horizon)))
                 for b in wind_buses)
    conts = []
    for k in rng.choice(n_gen, n_contingencies, replace=False):
        a = [1] * n_gen
        a[int(k)] = 0
        conts.append(Contingency(tuple(a), 0.0))
    return GridCase(buses=buses, lines=lines, generators=tuple(gens), wind_farms=wind,
                    loads=loads, horizon=horizon, slack_bus=int(load_buses[0]),
                    contingencies=tuple(conts), reserve=True,
                    name=name or f"synthetic{n_bus}")
