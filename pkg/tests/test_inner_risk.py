import numpy as np
import pytest
from scipy.optimize import minimize, minimize_scalar

from simplexmargin.codec import build_codebook, decode
from simplexmargin.inner_risk import (
    check_fisher_consistency, check_monotonicity, inner_minimizer, inner_risk, margin_transfer, minimize_batch,
)
from simplexmargin.properties import binary_minimizer_closed_form

KINDS = ["logistic", "exponential"]


@pytest.mark.parametrize("kind", KINDS)
def test_inner_risk_at_zero_is_one(kind, cb, rng):
    p = rng.dirichlet(np.ones(cb.num_classes))
    assert inner_risk(kind, cb, p, np.zeros(cb.dim)) == pytest.approx(1.0)


def test_inner_risk_binary_example():
    w = np.log(3) / 2
    v = inner_risk("exponential", build_codebook(2), [0.75, 0.25], [w])
    assert v == pytest.approx(0.75 * np.exp(-w) + 0.25 * np.exp(w))
    assert v == pytest.approx(np.sqrt(4 * 0.75 * 0.25))


def test_inner_risk_validates():
    cb = build_codebook(3)
    with pytest.raises(ValueError):
        inner_risk("logistic", cb, [0.5, 0.6, 0.1], [0, 0])
    with pytest.raises(ValueError):
        inner_risk("logistic", cb, [0.5, 0.5], [0, 0])
    with pytest.raises(ValueError):
        inner_risk("hinge", cb, [0.5, 0.25, 0.25], [0, 0])


@pytest.mark.parametrize("kind", KINDS)
def test_uniform_p_gives_zero(kind, cb):
    r = inner_minimizer(kind, cb, np.full(cb.num_classes, 1.0 / cb.num_classes))
    np.testing.assert_allclose(r.argmin_w, 0.0, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("p", np.round(np.arange(0.55, 0.951, 0.05), 2))
def test_binary_closed_form(kind, p):
    r = inner_minimizer(kind, build_codebook(2), [p, 1 - p])
    assert r.argmin_w[0] == pytest.approx(binary_minimizer_closed_form(kind, p), abs=1e-6)
    assert r.gradient_norm_at_solution <= 1e-10
    assert not r.unbounded


@pytest.mark.parametrize("kind,expected", [("logistic", np.log(3)), ("exponential", np.log(3) / 2)])
def test_binary_example_against_grid_search(kind, expected):
    cb = build_codebook(2)
    f = lambda w: inner_risk(kind, cb, [0.75, 0.25], [w])
    grid = np.linspace(-10, 10, 200001)
    coarse = grid[np.argmin([f(w) for w in grid[::100]]) * 100]
    fine = minimize_scalar(f, bracket=(coarse - 0.1, coarse, coarse + 0.1), tol=1e-12).x
    r = inner_minimizer(kind, cb, [0.75, 0.25])
    assert r.argmin_w[0] == pytest.approx(expected, abs=1e-9)
    assert r.argmin_w[0] == pytest.approx(fine, abs=1e-5)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("T", [3, 4, 6])
def test_matches_generic_optimizer(kind, T, rng):
    """Pointwise population minimiser: for a point with class probabilities p the
    population risk in w is exactly the inner risk, so a generic quasi-Newton
    minimisation is an independent oracle."""
    cb = build_codebook(T)
    for _ in range(5):
        p = rng.dirichlet(np.ones(T) * 2)
        ref = minimize(lambda w: inner_risk(kind, cb, p, w), np.zeros(T - 1), method="BFGS",
                       options=dict(gtol=1e-11)).x
        r = inner_minimizer(kind, cb, p)
        np.testing.assert_allclose(r.argmin_w, ref, atol=1e-5)
        assert r.gradient_norm_at_solution <= 1e-10
        assert r.min_value <= inner_risk(kind, cb, p, ref) + 1e-12


def test_objective_non_increasing_with_iterations(rng):
    cb = build_codebook(4)
    P = rng.dirichlet(np.ones(4), size=50)
    prev = None
    for it in range(1, 12):
        _, f, _, _, _ = minimize_batch("exponential", cb, P, max_iter=it)
        if prev is not None:
            assert np.all(f <= prev + 1e-14)
        prev = f


@pytest.mark.parametrize("kind", KINDS)
def test_zero_probability_is_flagged(kind):
    cb = build_codebook(3)
    r = inner_minimizer(kind, cb, [0.6, 0.4, 0.0])
    assert r.unbounded
    assert np.linalg.norm(r.argmin_w) <= 50 + 1e-9
    r = inner_minimizer(kind, cb, [1.0, 0.0, 0.0])
    assert r.unbounded and decode(cb, r.argmin_w) == 0


def test_inner_minimizer_validates():
    cb = build_codebook(3)
    with pytest.raises(ValueError):
        inner_minimizer("logistic", cb, [0.5, 0.5])
    with pytest.raises(ValueError):
        inner_minimizer("logistic", cb, [0.5, 0.5, 0.0], tol=0)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("T", [2, 3, 4])
def test_fisher_consistency_and_monotonicity(kind, T):
    cb = build_codebook(T)
    assert check_fisher_consistency(kind, cb, num_samples=500, seed=1).violations == 0
    assert check_monotonicity(kind, cb, num_pairs=200, seed=1).violations == 0


def test_dominant_class_example():
    cb = build_codebook(3)
    for kind in KINDS:
        assert decode(cb, inner_minimizer(kind, cb, [0.9, 0.05, 0.05]).argmin_w) == 0


def test_binary_monotone_example():
    cb = build_codebook(2)
    assert inner_minimizer("logistic", cb, [0.5, 0.5]).argmin_w[0] == pytest.approx(0.0, abs=1e-12)
    assert inner_minimizer("logistic", cb, [0.6, 0.4]).argmin_w[0] == pytest.approx(np.log(1.5), abs=1e-9)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("gamma", [0.1, 0.25, 0.4])
def test_binary_margin_transfer(kind, gamma):
    m = margin_transfer(kind, build_codebook(2), gamma)
    h = lambda p: binary_minimizer_closed_form(kind, p)
    assert m.m_gamma == pytest.approx(max(h(0.5 + gamma), -h(0.5 - gamma)), abs=1e-4)
    assert m.margin_bound == pytest.approx(2 * m.m_gamma)
    assert m.grid_resolution == 200


def test_binary_margin_transfer_exponential_quarter():
    assert margin_transfer("exponential", build_codebook(2), 0.25).m_gamma == pytest.approx(0.5493, abs=1e-4)


def test_margin_transfer_vanishes_as_gamma_shrinks():
    cb = build_codebook(2)
    vals = [margin_transfer("logistic", cb, g).m_gamma for g in (0.1, 0.01, 0.001)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 0.005


def test_three_class_facet_is_zero_below_quarter():
    # With p_y - p_j = 2 gamma and gamma <= 1/4 the third class can share the lead
    # with y, so the literal facet contains ties and the min margin is ~0.
    cb = build_codebook(3)
    assert margin_transfer("logistic", cb, 0.2).m_gamma < 1e-4
    assert margin_transfer("logistic", cb, 0.3).m_gamma > 0.1


def test_three_class_edge_region_positive_and_monotone():
    cb = build_codebook(3)
    m2 = margin_transfer("logistic", cb, 0.2, region="edge").m_gamma
    m3 = margin_transfer("logistic", cb, 0.3, region="edge").m_gamma
    assert 0 < m2 <= m3
    m2_fine = margin_transfer("logistic", cb, 0.2, grid_resolution=400, region="edge").m_gamma
    assert abs(m2 - m2_fine) <= 0.02 * m2


@pytest.mark.parametrize("T,res", [(2, 200), (3, 200), (4, 100)])
@pytest.mark.parametrize("region", ["facet", "edge"])
def test_grid_stability(T, res, region):
    cb = build_codebook(T)
    for g in (0.1, 0.25, 0.4):
        a = margin_transfer("logistic", cb, g, grid_resolution=res, region=region).m_gamma
        b = margin_transfer("logistic", cb, g, grid_resolution=2 * res, region=region).m_gamma
        # relative 2%, with an absolute floor for the values that are zero in exact arithmetic
        assert abs(a - b) <= 0.02 * max(a, b) + 1e-4


@pytest.mark.parametrize("kind", KINDS)
def test_margin_transfer_monotone_in_gamma(kind):
    for T in (2, 3):
        cb = build_codebook(T)
        vals = [margin_transfer(kind, cb, g, grid_resolution=100).m_gamma for g in (0.05, 0.15, 0.25, 0.35, 0.45)]
        assert all(b >= a - 1e-4 for a, b in zip(vals, vals[1:]))
        assert all(v >= 0 for v in vals)


def test_margin_transfer_validates():
    cb = build_codebook(2)
    for g in (0.0, -0.1, 0.6):
        with pytest.raises(ValueError):
            margin_transfer("logistic", cb, g)
    with pytest.raises(ValueError):
        margin_transfer("logistic", cb, 0.2, grid_resolution=5)
    with pytest.raises(ValueError):
        margin_transfer("logistic", cb, 0.2, region="corner")
