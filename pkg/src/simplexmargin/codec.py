"""Simplex label coding: T classes as the vertices of a regular simplex in R^(T-1)."""

from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Codebook:
    """Immutable set of simplex vertices, one row per class.

    Ties in :meth:`decode` go to the lowest class index.
    """

    num_classes: int
    vertices: np.ndarray

    @property
    def dim(self):
        return self.num_classes - 1

    def decode(self, w):
        return decode(self, w)

    def margin(self, w):
        return decision_margin(self, w)

    def barycenter(self, p):
        return barycenter(self, p)


def build_codebook(T):
    """Build the canonical T-class codebook.

    Vertices are ``sqrt(T/(T-1)) * Q (e_i - 1/T)`` where the rows of Q are the
    Gram-Schmidt orthonormalisation of ``e_1 - e_2, ..., e_1 - e_T``.
    """
    if int(T) != T or T < 2:
        raise ValueError(f"need an integer T >= 2, got {T!r}")
    T = int(T)
    eye = np.eye(T)
    spanning = np.stack([eye[0] - eye[k] for k in range(1, T)])
    # QR on the transpose is Gram-Schmidt in column order; fix signs so the
    # diagonal of R is positive, which pins the orientation.
    q, r = np.linalg.qr(spanning.T)
    q = q * np.sign(np.diag(r))
    centered = eye - 1.0 / T
    vertices = np.sqrt(T / (T - 1)) * centered @ q
    vertices.setflags(write=False)
    return Codebook(num_classes=T, vertices=vertices)


def _as_codes(cb, w):
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        w = w.reshape(1)
    if w.shape[-1] != cb.dim:
        raise ValueError(f"expected vectors of dimension {cb.dim}, got shape {w.shape}")
    return w


def projections(cb, w):
    """Inner products <w, y_k> for every class k (last axis)."""
    return _as_codes(cb, w) @ cb.vertices.T


def decode(cb, w):
    """Class index with the largest projection; accepts a single vector or a batch of rows.

    ``np.argmax`` returns the first maximiser, which is the lowest-index tie-break.
    """
    w = _as_codes(cb, w)
    out = np.argmax(w @ cb.vertices.T, axis=-1)
    return int(out) if w.ndim == 1 else out


def decision_margin(cb, w):
    """Gap between the largest and second-largest projection of ``w``.

    Equals ``min_{y != D(w)} <w, D(w) - y>``; for T=2 this is ``2|w|``.
    """
    w = _as_codes(cb, w)
    proj = w @ cb.vertices.T
    top2 = -np.partition(-proj, 1, axis=-1)[..., :2]
    out = top2[..., 0] - top2[..., 1]
    return float(out) if w.ndim == 1 else out


def check_simplex(p, tol=PROB_TOL):
    """Validate a probability vector (or rows of them), renormalising within ``tol``."""
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < -tol):
        raise ValueError("probability vector has negative or non-finite entries")
    total = p.sum(axis=-1, keepdims=True)
    if np.any(np.abs(total - 1.0) > tol):
        raise ValueError(f"probabilities must sum to 1 (got {np.ravel(total)[:3]})")
    return np.clip(p, 0.0, None) / total


def barycenter(cb, p):
    """Map a probability vector over classes to ``sum_y p_y * vertex_y``."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != cb.num_classes:
        raise ValueError(f"expected {cb.num_classes} probabilities, got shape {p.shape}")
    return check_simplex(p) @ cb.vertices
