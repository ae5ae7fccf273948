import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mrumor.analytic import conversion_probability, expected_next
from mrumor.core import ParamError, Population, initial_population, validate
from mrumor.oracle import (
    exact_conversion_distribution,
    exact_conversion_probability,
    exact_one_step_distribution,
    permutation_count_probability,
)


def params(**kw):
    base = dict(N=6, s=1, b=0.0, d=0.1, m=1, r=3)
    base.update(kw)
    return validate(base)


def test_hand_checkable_values():
    assert exact_conversion_probability(2, params(m=2, s=2)) == Fraction(1, 10)
    assert exact_conversion_probability(2, params(m=1)) == Fraction(7, 10)
    assert exact_conversion_probability(5, params(m=1)) == 1
    assert exact_conversion_probability(1, params(m=2, s=2)) == 0
    assert exact_conversion_probability(0, params()) == 0


def test_budgets():
    with pytest.raises(ParamError):
        exact_conversion_probability(3, params(N=27, r=3))
    with pytest.raises(ParamError):
        exact_one_step_distribution(initial_population(params(N=15), 2), params(N=15))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(N, r) for N in range(3, 25) for r in (2, 3, 4) if N % r == 0 and N > r]),
       st.data())
def test_enumeration_agrees_with_closed_form(Nr, data):
    N, r = Nr
    m = data.draw(st.integers(1, r - 1))
    p = params(N=N, s=m, m=m, r=r)
    n = data.draw(st.integers(0, N - 1))
    exact = exact_conversion_probability(n, p)
    got = conversion_probability(n, p)
    assert got == 0.0 if exact == 0 else abs(got - exact) / exact <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(8, 200), st.integers(2, 8), st.data())
def test_permutation_form_agrees_with_closed_form(N, r, data):
    m = data.draw(st.integers(1, r - 1))
    p = validate(N=N, s=m, b=0.0, d=0.1, m=m, r=r, require_divisible=False)
    n = data.draw(st.integers(0, N - 1))
    exact = permutation_count_probability(n, p)
    hyper = Fraction(
        sum(math.comb(n, j) * math.comb(N - 1 - n, r - 1 - j) for j in range(m, r)),
        math.comb(N - 1, r - 1),
    )
    assert exact == hyper
    got = conversion_probability(n, p)
    assert got == 0.0 if exact == 0 else abs(got - exact) / exact <= 1e-12


def test_point_mass_when_nothing_can_change():
    p = params(N=6, s=2, b=4 / 6, m=2, r=3)
    pop = Population(seeds=2, other_believers=0, agnostics=4, other_indifferents=0)
    dist = exact_one_step_distribution(pop, p)
    assert dist.support == (2,)
    assert dist.probabilities == (1,)


def test_small_case_mean():
    p = params()
    dist = exact_one_step_distribution(initial_population(p, 2), p)
    assert sum(dist.probabilities) == 1
    assert float(dist.mean()) == pytest.approx(4.7, abs=1e-12)
    assert min(dist.support) >= p.s and max(dist.support) <= p.max_believers


def test_flip_marginal_is_binomial():
    p = params()
    dist = exact_one_step_distribution(initial_population(p, 6), p).as_dict()
    d = Fraction(0.1)
    for k in range(6):
        assert dist[1 + k] == math.comb(5, k) * (1 - d) ** k * d ** (5 - k)


def test_conversion_distribution_small_case():
    # N=6, r=3, two believers, four indifferent Others, m=1: a room without a
    # believer exists iff both believers share a room, probability 2/5, and then
    # three Others stay indifferent
    p = params()
    conv = exact_conversion_distribution(initial_population(p, 2), p)
    assert conv == {1: Fraction(2, 5), 4: Fraction(3, 5)}


@pytest.mark.parametrize("N, r, m, s, agn", [(6, 3, 1, 1, 0), (8, 4, 2, 2, 2), (12, 3, 2, 2, 3),
                                            (12, 2, 1, 1, 3), (10, 5, 3, 3, 1)])
def test_mean_matches_expected_next(N, r, m, s, agn):
    p = params(N=N, r=r, m=m, s=s, b=agn / N, d=0.37)
    for n in range(p.s, p.max_believers + 1):
        dist = exact_one_step_distribution(initial_population(p, n), p)
        assert sum(dist.probabilities) == 1
        assert abs(float(dist.mean()) - expected_next(n, p)) <= 1e-10
