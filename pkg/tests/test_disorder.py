import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from glasschain.chain import CouplingVector
from glasschain.disorder import (
    BondEnergy,
    Constant,
    DisorderModel,
    LawKind,
    TruncatedEnergy,
    alpha_parameter,
    bernoulli,
    enumerate_realizations,
    gauge_reduce_ii,
    gauge_reduce_iii,
    gaussian,
    law_from_config,
    monte_carlo_average,
    quenched_average,
    shifted_symmetric,
    tabulated,
    two_point,
    uniform,
    uniform_alpha_model,
    zero_mean_two_point,
)

# 40-digit mpmath enumeration (disorder x spins)
AVG_J1W1_SYM3 = 0.627897885538266
AVG_TRUNC_SYM3 = -0.183200630196674
AVG_J1W1_SHIFTED = 0.408715978793477
AVG_TRUNC_SHIFTED = -0.190886504017758

SYM3 = DisorderModel([bernoulli(1.0, 0.5)] * 3)


def random_bernoulli(rng, n):
    return DisorderModel([bernoulli(rng.uniform(0.1, 3), rng.uniform(0, 1)) for _ in range(n)])


def random_shifted(rng, n, h):
    laws = []
    for i in range(n):
        mu = 0.0 if i == h - 1 else rng.uniform(0, 2)
        laws.append(shifted_symmetric(mu, rng.uniform(0.1, 3)))
    return DisorderModel(laws)


def test_law_invariants():
    with pytest.raises(ValueError):
        bernoulli(0.0, 0.5)
    with pytest.raises(ValueError):
        bernoulli(1.0, 1.2)
    with pytest.raises(ValueError):
        shifted_symmetric(-1.0, 1.0)
    assert shifted_symmetric(1.0, 2.0).wide
    assert not shifted_symmetric(2.0, 1.0).wide
    law = bernoulli(2.0, 0.3)
    assert law.p + law.q == 1.0 and law.values == (2.0, -2.0)


def test_continuous_density_validation():
    assert gaussian(0.5, 1.2).kind is LawKind.continuous
    uniform(-1, 2)
    tabulated(lambda x: 1.5 * x * x, -1.0, 1.0)
    with pytest.raises(ValueError):
        tabulated(lambda x: 2.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        uniform(1, 1)


def test_zero_mean_two_point():
    law = zero_mean_two_point(2.0, 1.0)
    assert law.probs == pytest.approx((1 / 3, 2 / 3))
    assert abs(law.mean()) <= 1e-15
    assert law.symmetric_center() is None


@pytest.mark.parametrize("biases, expected", [
    ((0.0, 0.0, 0.0), 0.0),
    ((1.0, 1.0, 1.0), 1.0),
    ((0.5, 0.5, 0.8), 0.2),
])
def test_alpha_examples(biases, expected):
    m = DisorderModel([bernoulli(1.0, 0.5 * (1 + b)) for b in biases])
    assert alpha_parameter(m) == pytest.approx(expected, abs=1e-15)


def test_alpha_rejects_other_laws():
    with pytest.raises(ValueError):
        alpha_parameter(DisorderModel([bernoulli(1, 0.5), shifted_symmetric(1, 2)]))


def test_gauge_iii_examples():
    g = gauge_reduce_iii(SYM3)
    assert (g.P, g.Q) == (0.5, 0.5)
    g = gauge_reduce_iii(DisorderModel([bernoulli(1.0, 1.0)] * 3))
    assert (g.P, g.Q) == (1.0, 0.0)
    g = gauge_reduce_iii(DisorderModel([bernoulli(1.0, 0.8), bernoulli(1.0, 0.75)]))
    assert g.P == pytest.approx(0.65) and g.Q == pytest.approx(0.35)


def test_gauge_iii_alpha_consistency(rng):
    for _ in range(20):
        m = random_bernoulli(rng, 5)
        g = gauge_reduce_iii(m)
        assert g.alpha == alpha_parameter(m)
        assert g.P - g.Q == pytest.approx(g.alpha, abs=2e-16)
        assert g.P + g.Q == pytest.approx(1.0, abs=1e-16)


def test_gauge_ii_example():
    m = DisorderModel([shifted_symmetric(0, 1), shifted_symmetric(1, 2), shifted_symmetric(1, 2)])
    g = gauge_reduce_ii(m, 1)
    assert g.bond_values == ((1.0,), (3.0, 1.0), (3.0, 1.0))
    assert (g.P, g.Q) == (0.5, 0.5)
    assert g.average(BondEnergy(1)) == pytest.approx(AVG_J1W1_SHIFTED, rel=1e-13)
    assert g.average(TruncatedEnergy(1, 2)) == pytest.approx(AVG_TRUNC_SHIFTED, rel=1e-13)
    assert quenched_average(m, BondEnergy(1)) == pytest.approx(AVG_J1W1_SHIFTED, rel=1e-13)


def test_gauge_ii_symmetric_everywhere():
    m = DisorderModel([shifted_symmetric(0, 1), shifted_symmetric(0, 1)])
    g = gauge_reduce_ii(m, 1)
    assert g.bond_values == ((1.0,), (1.0, 1.0))
    sym = DisorderModel([bernoulli(1, 0.5)] * 2)
    assert g.average(BondEnergy(2)) == pytest.approx(quenched_average(sym, BondEnergy(2)), rel=1e-14)


def test_gauge_ii_errors():
    with pytest.raises(ValueError):
        gauge_reduce_ii(DisorderModel([shifted_symmetric(1, 2)] * 3), 1)
    with pytest.raises(ValueError):
        gauge_reduce_ii(DisorderModel([shifted_symmetric(0, 2), bernoulli(1, 0.5)]), 1)


def test_gauge_reductions_match_enumeration(rng):
    for _ in range(20):
        n = int(rng.integers(3, 8))
        m = random_bernoulli(rng, n)
        g = gauge_reduce_iii(m)
        h = int(rng.integers(1, n + 1))
        k = h % n + 1
        for f in (BondEnergy(h), TruncatedEnergy(h, k)):
            assert g.average(f) == pytest.approx(quenched_average(m, f), rel=1e-11, abs=1e-300)
        m = random_shifted(rng, n, h)
        g = gauge_reduce_ii(m, h)
        for f in (BondEnergy(h), TruncatedEnergy(h, k)):
            assert g.average(f) == pytest.approx(quenched_average(m, f), rel=1e-11, abs=1e-300)


def test_enumeration_examples():
    real = list(enumerate_realizations(DisorderModel([bernoulli(1, 0.5)] * 2)))
    assert len(real) == 4 and all(p == 0.25 for _, p in real)
    assert {c.couplings for c, _ in real} == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    real = dict((c.couplings, p) for c, p in enumerate_realizations(DisorderModel([bernoulli(1, 0.6)] * 3)))
    assert real[(1.0, 1.0, 1.0)] == pytest.approx(0.216, rel=1e-15)


def test_enumeration_is_gray_ordered():
    real = [c.couplings for c, _ in enumerate_realizations(random_bernoulli(np.random.default_rng(1), 5))]
    for a, b in zip(real, real[1:]):
        assert sum(x != y for x, y in zip(a, b)) == 1


@given(st.lists(st.tuples(st.floats(0.1, 3), st.floats(0, 1)), min_size=2, max_size=10))
def test_probability_conservation(params):
    m = DisorderModel([bernoulli(j, p) for j, p in params])
    assert math.fsum(p for _, p in enumerate_realizations(m)) == pytest.approx(1.0, abs=1e-12)


def test_enumeration_errors():
    with pytest.raises(ValueError):
        list(enumerate_realizations(DisorderModel([gaussian(0, 1)] * 2)))
    with pytest.raises(ValueError):
        list(enumerate_realizations(DisorderModel([bernoulli(1, 0.5)] * 21)))


def test_quenched_average_examples():
    assert quenched_average(SYM3, Constant(1.0)) == 1.0
    assert quenched_average(SYM3, BondEnergy(1)) == pytest.approx(AVG_J1W1_SYM3, rel=1e-13)
    assert quenched_average(SYM3, TruncatedEnergy(1, 2)) == pytest.approx(AVG_TRUNC_SYM3, rel=1e-13)
    c, s = math.cosh(1), math.sinh(1)
    assert AVG_TRUNC_SYM3 == pytest.approx(-2 * (c * s) ** 4 / (c**6 - s**6) ** 2, rel=1e-13)
    assert AVG_J1W1_SYM3 == pytest.approx(0.5 * (0.930553325103354 + 0.325242445973177), rel=1e-13)


def test_plain_callable_observable():
    f = lambda c: c[1] * c[2]  # noqa: E731
    assert quenched_average(SYM3, f) == 0.0


def test_quenched_average_workers_identical(rng):
    m = random_bernoulli(rng, 17)
    f = BondEnergy(3)
    assert quenched_average(m, f, workers=1) == quenched_average(m, f, workers=2)


def test_monte_carlo_constant():
    mean, err = monte_carlo_average(DisorderModel([gaussian(0, 1)] * 3), Constant(2.5), 1000, seed=3)
    assert (mean, err) == (2.5, 0.0)


def test_monte_carlo_validation():
    m = DisorderModel([gaussian(0, 1)] * 3)
    with pytest.raises(ValueError):
        monte_carlo_average(m, Constant(1), 99, seed=1)
    with pytest.raises(ValueError):
        monte_carlo_average(m, Constant(1), 1000, seed=None)


def test_monte_carlo_deterministic():
    m = DisorderModel([gaussian(0.2, 1)] * 4)
    a = monte_carlo_average(m, BondEnergy(1), 5000, seed=11)
    b = monte_carlo_average(m, BondEnergy(1), 5000, seed=11, workers=2)
    assert a == b
    assert a != monte_carlo_average(m, BondEnergy(1), 5000, seed=12)


def test_monte_carlo_gaussian_first_inequality():
    m = DisorderModel([gaussian(0, 1)] * 5)
    mean, err = monte_carlo_average(m, BondEnergy(1), 100_000, seed=2024)
    assert mean > 5 * err


def test_monte_carlo_positive_couplings():
    m = DisorderModel([uniform(0.1, 2.0)] * 4)
    mean, err = monte_carlo_average(m, BondEnergy(2), 1000, seed=5)
    assert mean > 0


def test_monte_carlo_matches_exact_on_discrete():
    m = DisorderModel([shifted_symmetric(0.3, 1.0), shifted_symmetric(0.0, 2.0),
                       bernoulli(1.5, 0.7), two_point(0.5, -0.2, 0.4)])
    f = TruncatedEnergy(1, 3)
    exact = quenched_average(m, f)
    mean, err = monte_carlo_average(m, f, 20_000, seed=8)
    assert err > 0 and abs(mean - exact) <= 4 * err


def test_antithetic_pairs_flip_symmetric_bond():
    law = bernoulli(1.0, 0.5)
    u = np.array([0.1, 0.4, 0.6, 0.9])
    assert np.array_equal(law.ppf(u), -law.ppf(1 - u))


def test_uniform_alpha_model():
    m = uniform_alpha_model([1.0, 2.0, 0.5], 0.3)
    assert alpha_parameter(m) == pytest.approx(0.3, rel=1e-14)


@pytest.mark.parametrize("law", [bernoulli(1.5, 0.3), shifted_symmetric(0.5, 2.0), two_point(1.0, -3.0, 0.2),
                                 gaussian(0.1, 2.0), uniform(-1.0, 3.0)])
def test_law_config_round_trip(law):
    assert law_from_config(law.config()) == law


def test_law_config_errors():
    with pytest.raises(KeyError, match="^'p"):
        law_from_config({"kind": "bernoulli", "J": 1})
    with pytest.raises(KeyError, match="mu"):
        law_from_config({"kind": "bernoulli", "J": 1, "p": 0.5, "mu": 0})
    with pytest.raises(KeyError, match="kind"):
        law_from_config({"kind": "cauchy"})


def test_coupling_vector_from_enumeration_is_valid():
    c, p = next(enumerate_realizations(SYM3))
    assert isinstance(c, CouplingVector) and p == 0.125
