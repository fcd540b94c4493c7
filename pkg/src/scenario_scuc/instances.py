"""Random problem generators for cross-validation against brute-force oracles.

Every generator builds its data around a known feasible point, so the
instances are feasible by construction (scenario problems stay feasible for
every subset because dropping rows only enlarges the feasible set).
"""

from __future__ import annotations

import numpy as np

from .lp import LinearProgram, LpBuilder, Sense
from .milp import MixedIntegerProgram
from .reduction import ScenarioProgram


def random_lp(rng: np.random.Generator, n_vars: int | None = None,
              n_rows: int | None = None, integer_data: bool = False) -> LinearProgram:
    """Bounded LP with mixed row senses, feasible at a hidden point."""
    n = n_vars or int(rng.integers(1, 9))
    m = n_rows if n_rows is not None else int(rng.integers(1, n + 4))
    lo = -rng.integers(0, 6, n).astype(float)
    hi = rng.integers(1, 8, n).astype(float)
    x0 = lo + (hi - lo) * rng.random(n)
    A = rng.integers(-5, 6, (m, n)).astype(float) if integer_data else rng.normal(size=(m, n))
    A[rng.random((m, n)) < 0.3] = 0.0
    act = A @ x0
    senses, rhs = [], []
    for i in range(m):
        kind = rng.choice(3, p=[0.45, 0.45, 0.10])
        slack = float(rng.integers(0, 3)) if integer_data else float(rng.exponential(1.0))
        if kind == 0:
            senses.append(Sense.LE)
            rhs.append(act[i] + slack)
        elif kind == 1:
            senses.append(Sense.GE)
            rhs.append(act[i] - slack)
        else:
            senses.append(Sense.EQ)
            rhs.append(act[i])
    c = rng.integers(-9, 10, n).astype(float) if integer_data else rng.normal(size=n)
    return LinearProgram(c, A, senses, rhs, lo, hi)


def random_milp(rng: np.random.Generator, n_bin: int | None = None,
                n_cont: int | None = None) -> MixedIntegerProgram:
    """Binary/continuous program whose rows are loose around a random point;
    some instances are infeasible, which the oracles must also agree on."""
    nb = n_bin if n_bin is not None else int(rng.integers(1, 9))
    nc = n_cont if n_cont is not None else int(rng.integers(0, 9))
    n = nb + nc
    m = int(rng.integers(1, n + 4))
    lo = np.concatenate([np.zeros(nb), -rng.integers(0, 4, nc).astype(float)])
    hi = np.concatenate([np.ones(nb), rng.integers(1, 6, nc).astype(float)])
    x0 = lo + (hi - lo) * rng.random(n)
    x0[:nb] = np.round(x0[:nb])
    A = rng.normal(size=(m, n))
    A[rng.random((m, n)) < 0.3] = 0.0
    act = A @ x0
    is_le = rng.random(m) < 0.5
    shift = rng.normal(0.3, 0.6, m)
    rhs = np.where(is_le, act + shift, act - shift)
    senses = [Sense.LE if le else Sense.GE for le in is_le]
    c = rng.normal(size=n)
    return MixedIntegerProgram(LinearProgram(c, A, senses, rhs, lo, hi), frozenset(range(nb)))


def random_scenario_lp(rng: np.random.Generator, n_scenarios: int,
                       n_vars: int | None = None) -> ScenarioProgram:
    """Covering-type scenario LP: ``min c'x`` over a box with one or two
    ``a'x >= b`` rows per scenario, plus an optional deterministic budget row."""
    n = n_vars or int(rng.integers(2, 4))
    b = LpBuilder()
    ub = 10.0
    xs = [b.add_var(f"x{j}", 0.0, ub, float(rng.uniform(1.0, 5.0))) for j in range(n)]
    labels = []
    if rng.random() < 0.5:
        b.add_row({j: 1.0 for j in xs}, Sense.LE, ub * n, "budget")
        labels.append(0)
    for i in range(1, n_scenarios + 1):
        for _ in range(int(rng.integers(1, 3))):
            a = rng.uniform(0.1, 2.0, n)
            a[rng.random(n) < 0.3] = 0.0
            if not a.any():
                a[rng.integers(n)] = 1.0
            rhs = float(rng.uniform(0.2, 0.9)) * float(a.sum()) * ub
            b.add_row(dict(zip(xs, a)), Sense.GE, rhs, ("scenario", i))
            labels.append(i)
    return ScenarioProgram(MixedIntegerProgram(b.build()), np.array(labels, dtype=int), n_scenarios)


def random_two_stage(rng: np.random.Generator, n_scenarios: int,
                     n_units: int | None = None) -> ScenarioProgram:
    """Small commitment-like scenario MILP.

    Binaries ``y_j`` switch units on; ``l_j y_j <= x_j <= u_j y_j``.  Each
    scenario adds a demand row ``sum x >= d_i`` and a transfer row
    ``|a'x - s_i| <= cap`` that depends only on ``x``.  Uncertainty therefore
    lives in the second stage only, as two-stage reduction requires.
    """
    nu = n_units or int(rng.integers(2, 4))
    b = LpBuilder()
    lo_cap = rng.integers(0, 3, nu) * 10.0
    hi_cap = lo_cap + rng.integers(3, 9, nu) * 10.0
    y = [b.add_var(f"y{j}", 0, 1, float(rng.integers(0, 40)), binary=True) for j in range(nu)]
    x = [b.add_var(f"x{j}", 0.0, float(hi_cap[j]), float(rng.choice([1, 2, 5, 10, 50, 100])))
         for j in range(nu)]
    labels = []
    for j in range(nu):
        b.add_row({x[j]: 1.0, y[j]: -lo_cap[j]}, Sense.GE, 0.0, ("min", j))
        b.add_row({x[j]: 1.0, y[j]: -hi_cap[j]}, Sense.LE, 0.0, ("max", j))
        labels += [0, 0]
    # hidden all-on dispatch that every scenario row admits
    x0 = lo_cap + (hi_cap - lo_cap) * rng.uniform(0.3, 0.9, nu)
    a = rng.integers(-1, 2, nu).astype(float)
    if not a.any():
        a[0] = 1.0
    cap = float(rng.integers(1, 6)) * 10.0
    base = float(x0.sum()) * rng.uniform(0.4, 0.8)
    for i in range(1, n_scenarios + 1):
        d = float(np.round(base + rng.normal(0.0, 0.15 * base)))
        d = min(d, float(np.floor(x0.sum())))
        b.add_row(dict(zip(x, np.ones(nu))), Sense.GE, d, ("scenario", i, "demand"))
        s = float(np.round(a @ x0 + rng.uniform(-cap, cap)))
        b.add_row(dict(zip(x, a)), Sense.LE, s + cap, ("scenario", i, "transfer", "max"))
        b.add_row(dict(zip(x, a)), Sense.GE, s - cap, ("scenario", i, "transfer", "min"))
        labels += [i, i, i]
    lp = b.build()
    return ScenarioProgram(MixedIntegerProgram(lp, frozenset(b.binary)),
                           np.array(labels, dtype=int), n_scenarios)
