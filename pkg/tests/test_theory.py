import math

import pytest
from hypothesis import given, settings, strategies as st

from scenario_scuc.checks import exact_binomial_tail, exact_sample_complexity, risk_monotonicity_violations
from scenario_scuc.theory import (ComplexityQuery, DomainError, binomial_tail, certify,
                                  epsilon_posterior, prior_sample_size, sample_complexity_convex)


def test_posterior_reference_values():
    assert epsilon_posterior(10, 0, 0.1) == pytest.approx(0.36904, abs=1e-5)
    assert epsilon_posterior(2, 1, 0.5) == pytest.approx(0.875, abs=1e-12)
    assert epsilon_posterior(7, 7, 0.2) == 1.0


def test_posterior_large_n_is_finite():
    eps = epsilon_posterior(10**6, 500, 1e-9)
    assert 0.0 < eps < 0.01 and math.isfinite(eps)


@pytest.mark.parametrize("args", [(0, 0, 0.1), (5, 6, 0.1), (5, -1, 0.1), (5, 1, 0.0), (5, 1, 1.0)])
def test_posterior_domain(args):
    with pytest.raises(DomainError):
        epsilon_posterior(*args)


def test_binomial_tail_reference_and_domain():
    assert binomial_tail(90, 1, 0.05) == pytest.approx(0.009888, abs=1e-6)
    assert binomial_tail(5, 0, 0.3) == 0.0
    with pytest.raises(DomainError):
        binomial_tail(3, 4, 0.1)
    with pytest.raises(DomainError):
        binomial_tail(3, 1, 1.5)


def test_binomial_tail_against_rationals():
    for n in (1, 7, 30):
        for h in range(n + 1):
            for eps in (0.01, 0.3):
                assert binomial_tail(n, h, eps) == pytest.approx(
                    float(exact_binomial_tail(n, h, eps)), abs=1e-12)


def test_sample_complexity_values():
    assert sample_complexity_convex(ComplexityQuery(0.05, 0.01, 1)) == 90
    assert sample_complexity_convex(ComplexityQuery(0.99, 0.5, 1)) == 1
    assert sample_complexity_convex(ComplexityQuery(0.05, 0.01, 5)) == 229
    for h in (1, 3, 8):
        assert sample_complexity_convex(ComplexityQuery(0.1, 1e-3, h)) == \
            exact_sample_complexity(0.1, 1e-3, h)
    with pytest.raises(DomainError):
        ComplexityQuery(0.1, 0.1, 0)


def test_prior_sample_size():
    n = prior_sample_size(0.05, 1e-3, 0)
    assert n == 242
    assert epsilon_posterior(n, 0, 1e-3) <= 0.05 < epsilon_posterior(n - 1, 0, 1e-3)
    for h in (0, 1, 4, 20):
        n = prior_sample_size(0.1, 0.01, h)
        assert epsilon_posterior(n, h, 0.01) <= 0.1
        if n - 1 > h:
            assert epsilon_posterior(n - 1, h, 0.01) > 0.1
    assert prior_sample_size(0.999999, 0.5, 3) == 4


def test_posterior_monotone_grid():
    assert risk_monotonicity_violations(n_max=60) == []


def test_certificate_is_reproducible():
    cert = certify(100, 2, 0.01)
    assert cert.epsilon == epsilon_posterior(100, 2, 0.01)
    assert cert.verify()
    d = cert.to_dict()
    assert d["epsilon"] == cert.epsilon and "0.99" in d["claim"]


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 3000), data=st.data(), beta=st.floats(1e-12, 0.5))
def test_posterior_in_unit_interval_and_monotone(n, data, beta):
    k = data.draw(st.integers(0, n))
    e = epsilon_posterior(n, k, beta)
    assert 0.0 <= e <= 1.0
    if k < n:
        assert e <= epsilon_posterior(n, k + 1, beta)
    assert epsilon_posterior(n + 1, k, beta) <= e


def test_decrease_in_n_needs_moderate_beta():
    # with k = 0 and beta above 1/2 the first steps in N raise the risk level
    assert epsilon_posterior(2, 0, 0.75) > epsilon_posterior(1, 0, 0.75)
    assert epsilon_posterior(3, 0, 0.9) > epsilon_posterior(2, 0, 0.9)
    for beta in (0.6, 0.9, 0.99):
        for n in range(3, 200):
            for k in range(n + 1):
                assert epsilon_posterior(n + 1, k, beta) <= epsilon_posterior(n, k, beta)
