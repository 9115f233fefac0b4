import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplexmargin.exceptions import InsufficientDataError
from simplexmargin.rates import exp_decay_fit, loglog_slope, ols

NS = [250, 500, 1000, 2000, 4000]


def test_exact_power_law():
    fit = loglog_slope([(n, 10 * n ** -0.5) for n in NS])
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(10), abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 5 and fit.excluded == 0


def test_constant_error():
    fit = loglog_slope([(n, 0.1) for n in NS])
    assert fit.slope == pytest.approx(0.0, abs=1e-12) and fit.r_squared == 1.0


def test_meta_fit_reference_value():
    # slope-vs-alpha line through slopes that follow -0.35 alpha exactly
    alphas = [0.5, 1, 2, 3, 4]
    slope, _, r2 = ols(alphas, [-0.35 * a + 0.1 for a in alphas])
    assert slope == pytest.approx(-0.35, abs=1e-12) and r2 == pytest.approx(1.0)


def test_exact_exponential():
    fit = exp_decay_fit([(n, np.exp(-0.01 * n)) for n in [100, 200, 400, 800, 1600]])
    assert fit.slope == pytest.approx(-0.01, abs=1e-14)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_zero_tail_excluded_and_counted():
    pairs = [(100, 0.05), (200, 0.01), (400, 0.002), (800, 0.0), (1600, 0.0)]
    fit = exp_decay_fit(pairs)
    assert fit.n_points == 3 and fit.excluded == 2


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        loglog_slope([(100, 0.1), (200, 0.0)])
    with pytest.raises(InsufficientDataError):
        exp_decay_fit([(100, 0.1), (200, 0.05), (400, 0.0)], min_points=4)
    with pytest.raises(InsufficientDataError):
        loglog_slope([(100, 0.1), (100, 0.2)])
    with pytest.raises(ValueError):
        loglog_slope([(0, 0.1), (100, 0.2)])
    with pytest.raises(ValueError):
        loglog_slope([(10, -0.1), (100, 0.2)])


def test_larger_gap_gives_more_negative_rate():
    a = exp_decay_fit([(n, np.exp(-0.002 * n)) for n in [100, 200, 400, 800]])
    b = exp_decay_fit([(n, np.exp(-0.008 * n)) for n in [100, 200, 400, 800]])
    assert b.slope < a.slope


@settings(max_examples=100, deadline=None)
@given(c=st.floats(1e-6, 1e6), seed=st.integers(0, 2 ** 32 - 1))
def test_slope_invariant_to_rescaling(c, seed):
    e = np.random.default_rng(seed).uniform(0.01, 0.5, size=5)
    a = loglog_slope(list(zip(NS, e)))
    b = loglog_slope(list(zip(NS, c * e)))
    assert b.slope == pytest.approx(a.slope, abs=1e-9)
    assert b.intercept == pytest.approx(a.intercept + np.log(c), abs=1e-8)
    assert 0 <= a.r_squared <= 1
