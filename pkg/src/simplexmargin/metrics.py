"""Monte-Carlo risk and distance estimators for plug-in classifiers."""

from dataclasses import dataclass

import numpy as np

from .codec import build_codebook, decision_margin
from .losses import SurrogateLoss


@dataclass(frozen=True)
class RiskEstimate:
    value: float
    n_eval: int
    std_error: float


def _points_labels(eval_set):
    if hasattr(eval_set, "points"):
        return eval_set.points, eval_set.labels
    X, y = eval_set
    return np.asarray(X, dtype=float), np.asarray(y)


def _labels_of(classifier, X):
    predict = getattr(classifier, "predict", classifier)
    return np.asarray(predict(X))


def zero_one_risk(classifier, eval_set):
    """Fraction of misclassified points with a binomial standard error.

    ``classifier`` is a callable (or anything with ``.predict``) mapping an
    (n, d) array to n labels; ``eval_set`` is a Dataset or an ``(X, y)`` pair.
    """
    X, y = _points_labels(eval_set)
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    v = float(np.mean(_labels_of(classifier, X) != y))
    return RiskEstimate(v, len(y), float(np.sqrt(v * (1 - v) / len(y))))


def surrogate_risk(score_fn, eval_set, loss, cb=None):
    """Mean surrogate loss of a score function ``R^d -> R^(T-1)`` on labelled points."""
    X, y = _points_labels(eval_set)
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    F = np.asarray(score_fn(X), dtype=float).reshape(len(y), -1)
    cb = cb or build_codebook(F.shape[1] + 1)
    vals, _ = SurrogateLoss.from_name(loss).value_and_grad(cb, F, np.asarray(y, dtype=int))
    return RiskEstimate(float(vals.mean()), len(y), float(vals.std(ddof=1) / np.sqrt(len(y))) if len(y) > 1 else 0.0)


def hamming_distance(c1, c2, eval_points):
    """Empirical probability that two classifiers disagree."""
    X = np.asarray(eval_points, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("no evaluation points")
    return float(np.mean(_labels_of(c1, X) != _labels_of(c2, X)))


def disk_grid(resolution=200, radius=1.0):
    """Square lattice over the disk's bounding box, restricted to the disk."""
    t = np.linspace(-radius, radius, resolution)
    G = np.stack(np.meshgrid(t, t), axis=-1).reshape(-1, 2)
    return G[np.hypot(G[:, 0], G[:, 1]) <= radius]


def sup_norm_distance(f1, f2, grid_points=None):
    """``max_x ||f1(x) - f2(x)||`` over the grid.

    The true sup-norm can only be larger; with ``grid_points=None`` the default
    200x200 disk lattice is used.
    """
    X = disk_grid() if grid_points is None else np.asarray(grid_points, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty grid")
    D = np.asarray(f1(X), dtype=float).reshape(X.shape[0], -1) - np.asarray(f2(X), dtype=float).reshape(X.shape[0], -1)
    return float(np.max(np.linalg.norm(D, axis=1)))


def margin_histogram(f, eval_points, thresholds, cb=None):
    """Empirical CDF ``P{M(f(X)) <= t}`` at each threshold."""
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(np.diff(thresholds) < 0):
        raise ValueError("thresholds must be sorted ascending")
    X = np.asarray(eval_points, dtype=float)
    F = np.asarray(f(X), dtype=float).reshape(X.shape[0], -1)
    cb = cb or build_codebook(F.shape[1] + 1)
    M = np.sort(decision_margin(cb, F))
    return np.searchsorted(M, thresholds, side="right") / len(M)


def comparison_radius(T):
    """``sqrt((T-1)/(2T))``: perturbations smaller than this times ``M(f(x))`` cannot change the decoded class."""
    return np.sqrt((T - 1) / (2 * T))
