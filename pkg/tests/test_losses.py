import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplexmargin.codec import build_codebook
from simplexmargin.losses import LN2, SurrogateLoss, loss_value_and_grad, phi_value_and_derivatives
from simplexmargin.properties import check_gradients


def test_phi_at_zero():
    v, d1, d2 = phi_value_and_derivatives("logistic", 0.0)
    assert v == pytest.approx(1.0)
    assert d1 == pytest.approx(-0.5 / LN2)
    assert d2 == pytest.approx(0.25 / LN2)
    assert phi_value_and_derivatives("exponential", 0.0) == (1.0, -1.0, 1.0)


def test_logistic_matches_direct_formula(rng):
    t = rng.uniform(-20, 20, size=200)
    v, d1, d2 = phi_value_and_derivatives("logistic", t)
    np.testing.assert_allclose(v, np.logaddexp(0.0, -t) / LN2, rtol=1e-12)
    s, s_neg = 1 / (1 + np.exp(-t)), 1 / (1 + np.exp(t))
    np.testing.assert_allclose(d1, -s_neg / LN2, rtol=1e-12)
    np.testing.assert_allclose(d2, s * s_neg / LN2, rtol=1e-12)


def test_logistic_stable_for_large_arguments():
    t = np.array([-500.0, -31.0, -30.0, 30.0, 500.0])
    v, d1, d2 = phi_value_and_derivatives("logistic", t)
    assert np.all(np.isfinite(v)) and np.all(np.isfinite(d1)) and np.all(np.isfinite(d2))
    assert v[0] == pytest.approx(500 / LN2)
    assert v[-1] == pytest.approx(0.0, abs=1e-200)
    assert np.all(np.diff(v) <= 0)


def test_phi_rejects_non_finite():
    for bad in (np.inf, -np.inf, np.nan):
        with pytest.raises(ValueError):
            phi_value_and_derivatives("logistic", bad)
    with pytest.raises(ValueError):
        phi_value_and_derivatives("hinge", 0.0)


@pytest.mark.parametrize("kind", ["logistic", "exponential"])
def test_phi_convex_non_increasing(kind):
    t = np.linspace(-10, 10, 2001)
    v, d1, d2 = phi_value_and_derivatives(kind, t)
    assert np.all(d1 <= 0) and np.all(d2 >= 0) and np.all(v >= 0)


def test_loss_value_and_grad_examples():
    cb3 = build_codebook(3)
    for y in range(3):
        v, g = loss_value_and_grad("square", cb3, cb3.vertices[y], y)
        assert v == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(g, 0.0, atol=1e-15)
        v, g = loss_value_and_grad("exponential", cb3, np.zeros(2), y)
        assert v == pytest.approx(1.0)
        np.testing.assert_allclose(g, -cb3.vertices[y])
    v, g = loss_value_and_grad("square", build_codebook(2), [0.0], 0)
    assert v == pytest.approx(1.0)
    np.testing.assert_allclose(g, [-2.0])


def test_loss_dimension_mismatch():
    with pytest.raises(ValueError):
        loss_value_and_grad("square", build_codebook(3), [1.0, 2.0, 3.0], 0)
    with pytest.raises(ValueError):
        loss_value_and_grad("square", build_codebook(3), [1.0, 2.0], 5)


def test_surrogate_loss_construction():
    assert SurrogateLoss.from_name("logistic") == SurrogateLoss("margin", "logistic")
    assert SurrogateLoss.from_name("square").name == "square"
    with pytest.raises(ValueError):
        SurrogateLoss.from_name("hinge")
    with pytest.raises(ValueError):
        SurrogateLoss("margin")
    with pytest.raises(ValueError):
        SurrogateLoss("square", "logistic")


def test_finite_difference_gradients():
    res = check_gradients(num_checks=100)
    assert res.passed, res.failures
    assert res.checked == 300


def test_batch_matches_single_sample(rng):
    cb = build_codebook(4)
    W = rng.normal(size=(20, 3))
    y = rng.integers(4, size=20)
    for name in ("square", "logistic", "exponential"):
        vals, G = SurrogateLoss.from_name(name).value_and_grad(cb, W, y)
        for i in range(20):
            v, g = loss_value_and_grad(name, cb, W[i], y[i])
            assert vals[i] == pytest.approx(v)
            np.testing.assert_allclose(G[i], g)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), t=st.floats(0, 1), T=st.integers(2, 6),
       name=st.sampled_from(["square", "logistic", "exponential"]))
def test_convex_along_lines(seed, t, T, name):
    rng = np.random.default_rng(seed)
    cb = build_codebook(T)
    w1, w2 = rng.normal(size=(2, T - 1)) * 3
    y = int(rng.integers(T))
    f = lambda w: loss_value_and_grad(name, cb, w, y)[0]
    assert f(t * w1 + (1 - t) * w2) <= t * f(w1) + (1 - t) * f(w2) + 1e-10


@settings(max_examples=100, deadline=None)
@given(w=st.floats(-10, 10), y=st.sampled_from([0, 1]))
def test_binary_square_loss_is_margin_function(w, y):
    cb = build_codebook(2)
    code = cb.vertices[y, 0]
    v, _ = loss_value_and_grad("square", cb, [w], y)
    assert v == pytest.approx((1 - w * code) ** 2, rel=1e-12, abs=1e-12)
