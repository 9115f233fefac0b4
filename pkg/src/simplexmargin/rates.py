"""Least-squares fits of learning curves: power laws (log-log) and exponential decay (log-linear)."""

from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientDataError


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    excluded: int = 0


def ols(x, y):
    """Slope, intercept and r^2 of ``y ~ a x + b``. A constant ``y`` fits perfectly (r^2 = 1)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (a * x + b)
    ss_tot = np.sum((y - y.mean()) ** 2)
    ss_res = np.sum(resid ** 2)
    if ss_tot <= 1e-300:
        r2 = 1.0
    else:
        r2 = float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))
    return float(a), float(b), r2


def _split(pairs, min_points):
    pairs = [(float(n), float(e)) for n, e in pairs]
    if any(n <= 0 for n, _ in pairs):
        raise ValueError("sample sizes must be positive")
    if any(e < 0 for _, e in pairs):
        raise ValueError("errors must be non-negative")
    kept = [(n, e) for n, e in pairs if e > 0]
    if len(kept) < max(2, min_points) or len({n for n, _ in kept}) < 2:
        raise InsufficientDataError(
            f"need at least {max(2, min_points)} points with positive error, got {len(kept)}")
    n, e = np.array(kept).T
    return n, e, len(pairs) - len(kept)


def loglog_slope(pairs, min_points=2):
    """Fit ``log error = slope * log n + intercept``; zero errors are dropped and counted."""
    n, e, dropped = _split(pairs, min_points)
    a, b, r2 = ols(np.log(n), np.log(e))
    return RateFit(a, b, r2, len(n), dropped)


def exp_decay_fit(pairs, min_points=2):
    """Fit ``log error = slope * n + intercept`` so that ``error ~ A exp(slope * n)``."""
    n, e, dropped = _split(pairs, min_points)
    a, b, r2 = ols(n, np.log(e))
    return RateFit(a, b, r2, len(n), dropped)
