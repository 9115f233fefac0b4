"""Surrogate losses on simplex codes.

Two families are supported: the square loss ``||w - y||^2`` and margin losses
``phi(<w, y>)`` with ``phi`` either the (base-2 normalised) logistic function or
the exponential.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

LN2 = np.log(2.0)
PHI_KINDS = ("logistic", "exponential")
LOSS_NAMES = ("square",) + PHI_KINDS


def _phi_arrays(kind, t):
    t = np.asarray(t, dtype=float)
    if kind == "exponential":
        v = np.exp(-t)
        return v, -v, v
    if kind == "logistic":
        # log1p(exp(-t)) overflows for very negative t; there it equals -t + log1p(exp(t)).
        neg = t < -30.0
        safe = np.where(neg, 0.0, t)
        soft = np.where(neg, -t + np.log1p(np.exp(np.where(neg, t, 0.0))), np.log1p(np.exp(-safe)))
        sig, sig_neg = expit(t), expit(-t)
        return soft / LN2, -sig_neg / LN2, sig * sig_neg / LN2
    raise ValueError(f"unknown phi kind {kind!r}; expected one of {PHI_KINDS}")


def phi_value_and_derivatives(kind, t):
    """Return ``(phi(t), phi'(t), phi''(t))``; works elementwise on arrays."""
    if not np.all(np.isfinite(t)):
        raise ValueError("phi argument must be finite")
    v, d1, d2 = _phi_arrays(kind, t)
    if np.ndim(t) == 0:
        return float(v), float(d1), float(d2)
    return v, d1, d2


@dataclass(frozen=True)
class SurrogateLoss:
    """``kind`` is ``"square"`` or ``"margin"``; margin losses carry ``phi_kind``."""

    kind: str
    phi_kind: str = None

    def __post_init__(self):
        if self.kind == "square":
            if self.phi_kind is not None:
                raise ValueError("square loss takes no phi_kind")
        elif self.kind == "margin":
            if self.phi_kind not in PHI_KINDS:
                raise ValueError(f"margin loss needs phi_kind in {PHI_KINDS}, got {self.phi_kind!r}")
        else:
            raise ValueError(f"unknown loss kind {self.kind!r}")

    @classmethod
    def from_name(cls, name):
        """``"square"``, ``"logistic"`` or ``"exponential"``."""
        if isinstance(name, cls):
            return name
        if name == "square":
            return cls("square")
        if name in PHI_KINDS:
            return cls("margin", name)
        raise ValueError(f"unknown loss {name!r}; expected one of {LOSS_NAMES}")

    @property
    def name(self):
        return "square" if self.kind == "square" else self.phi_kind

    @property
    def smoothness(self):
        """Upper bound on the loss Hessian in ``w`` (operator norm), used for step sizes.

        For the exponential loss this is ``phi''(0)``, which bounds the
        curvature only while the margins stay non-negative on average.
        """
        return {"square": 2.0, "logistic": 0.25 / LN2, "exponential": 1.0}[self.name]

    def value_and_grad(self, cb, W, labels):
        """Vectorised loss over rows: ``W`` is (n, T-1), ``labels`` (n,) class indices.

        Returns per-row values (n,) and gradients (n, T-1).
        """
        Y = cb.vertices[labels]
        if self.kind == "square":
            diff = W - Y
            return np.einsum("ij,ij->i", diff, diff), 2.0 * diff
        t = np.einsum("ij,ij->i", W, Y)
        v, d1, _ = _phi_arrays(self.phi_kind, t)
        return v, d1[:, None] * Y


def loss_value_and_grad(loss, cb, w, y):
    """Single-sample loss value and gradient with respect to the prediction ``w``."""
    loss = SurrogateLoss.from_name(loss)
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != cb.dim:
        raise ValueError(f"expected a vector of dimension {cb.dim}, got {w.shape[0]}")
    if not 0 <= int(y) < cb.num_classes:
        raise ValueError(f"class index {y} out of range for T={cb.num_classes}")
    v, g = loss.value_and_grad(cb, w[None, :], np.array([int(y)]))
    return float(v[0]), g[0]
