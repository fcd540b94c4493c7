"""Sample-complexity bounds and posterior risk certificates.

All probability arithmetic is done in log space; binomial coefficients come
from ``lgamma`` so that very large ``N`` never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    pass


def log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _check_prob(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value!r}")


def epsilon_posterior(n: int, k: int, beta: float) -> float:
    """Risk level certified for a solution with an invariant set of size ``k``.

    ``1`` when ``k == n``; otherwise ``1 - (beta / (n * C(n, k)))**(1/(n-k))``.
    """
    if n < 1 or not 0 <= k <= n:
        raise DomainError(f"need n >= 1 and 0 <= k <= n, got n={n}, k={k}")
    _check_prob("beta", beta)
    if k == n:
        return 1.0
    log_base = math.log(beta) - math.log(n) - log_comb(n, k)
    return -math.expm1(log_base / (n - k))


def binomial_tail(n: int, h: int, eps: float) -> float:
    """``sum_{i<h} C(n,i) eps^i (1-eps)^(n-i)``, i.e. ``P[Bin(n, eps) <= h-1]``."""
    if not 0 <= h <= n:
        raise DomainError(f"need 0 <= h <= n, got h={h}, n={n}")
    _check_prob("eps", eps)
    if h == 0:
        return 0.0
    le, l1e = math.log(eps), math.log1p(-eps)
    logs = [log_comb(n, i) + i * le + (n - i) * l1e for i in range(h)]
    peak = max(logs)
    total = math.fsum(math.exp(v - peak) for v in logs)
    return min(1.0, math.exp(peak + math.log(total)))


@dataclass(frozen=True)
class ComplexityQuery:
    epsilon: float
    beta: float
    helly_h: int

    def __post_init__(self):
        _check_prob("epsilon", self.epsilon)
        _check_prob("beta", self.beta)
        if self.helly_h < 1:
            raise DomainError("helly_h must be >= 1")


def _smallest_n(pred, start: int) -> int:
    """Smallest ``n >= start`` with ``pred(n)`` for a predicate monotone in ``n``."""
    if pred(start):
        return start
    lo, step = start, 1
    while not pred(lo + step):
        lo += step
        step *= 2
    hi = lo + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def sample_complexity_convex(q: ComplexityQuery) -> int:
    """Smallest ``N`` whose binomial tail with ``h`` support scenarios is ``<= beta``."""
    return _smallest_n(lambda n: binomial_tail(n, q.helly_h, q.epsilon) <= q.beta, q.helly_h)


def prior_sample_size(epsilon: float, beta: float, h: int) -> int:
    """Smallest ``N > h`` with ``epsilon_posterior(N, h, beta) <= epsilon``."""
    _check_prob("epsilon", epsilon)
    _check_prob("beta", beta)
    if h < 0:
        raise DomainError("h must be >= 0")
    return _smallest_n(lambda n: epsilon_posterior(n, h, beta) <= epsilon, max(h + 1, 1))


@dataclass(frozen=True)
class EpsilonCertificate:
    """Claim ``P^N[V(x) <= epsilon] >= 1 - beta`` for the solved scenario problem."""

    n_scenarios: int
    invariant_cardinality: int
    confidence_beta: float
    epsilon: float

    def verify(self) -> bool:
        return epsilon_posterior(self.n_scenarios, self.invariant_cardinality,
                                 self.confidence_beta) == self.epsilon

    def to_dict(self) -> dict:
        return {
            "n_scenarios": self.n_scenarios,
            "invariant_cardinality": self.invariant_cardinality,
            "confidence_beta": self.confidence_beta,
            "epsilon": self.epsilon,
            "claim": f"P^N[V(x) <= {self.epsilon!r}] >= {1 - self.confidence_beta!r}",
        }


def certify(n: int, invariant_set_size: int, beta: float) -> EpsilonCertificate:
    """Posterior certificate for a verified invariant set of the given size."""
    eps = epsilon_posterior(n, invariant_set_size, beta)
    return EpsilonCertificate(n, invariant_set_size, beta, eps)
