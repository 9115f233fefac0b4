"""Conditional (inner) risk of margin losses and its minimiser.

For a probability vector ``p`` over the T classes the inner risk is
``Phi(p, w) = sum_y p_y * phi(<w, y>)``. Its minimiser ``h(p)`` is the value the
population-optimal score function takes at any point whose class-conditional
probabilities are ``p``.
"""

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .codec import check_simplex, decision_margin, decode
from .losses import _phi_arrays, PHI_KINDS

W_CAP = 50.0
_ARMIJO = 1e-4


@dataclass
class InnerMinimizerResult:
    argmin_w: np.ndarray
    min_value: float
    gradient_norm_at_solution: float
    iterations: int
    unbounded: bool = False


@dataclass
class CheckReport:
    violations: int
    checked: int
    worst: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return self.violations == 0


@dataclass
class MarginTransfer:
    """Margin-transfer constant for a probability edge ``gamma``.

    ``m_gamma`` is expressed on the binary scale, i.e. half the projection gap
    ``M``; for T=2 it equals ``max(h(1/2 + gamma), -h(1/2 - gamma))``.
    ``margin_bound`` is the same quantity on the ``M`` scale (``2 * m_gamma``).
    """

    gamma: float
    m_gamma: float
    grid_resolution: int
    margin_bound: float
    region: str = "facet"
    argmin_p: np.ndarray = None
    unbounded: bool = False


def _check_phi(kind):
    if kind not in PHI_KINDS:
        raise ValueError(f"unknown phi kind {kind!r}; expected one of {PHI_KINDS}")


def _objective(kind, Y, P, W):
    v, d1, d2 = _phi_arrays(kind, W @ Y.T)
    return (P * v).sum(axis=1), (P * d1) @ Y, P * d2


def inner_risk(phi_kind, cb, p, w):
    """``sum_y p_y phi(<w, y>)`` for a single probability vector and code."""
    _check_phi(phi_kind)
    p = check_simplex(np.asarray(p, dtype=float).reshape(-1))
    w = np.asarray(w, dtype=float).reshape(-1)
    if p.shape[0] != cb.num_classes or w.shape[0] != cb.dim:
        raise ValueError("p must have T entries and w must have T-1 entries")
    f, _, _ = _objective(phi_kind, cb.vertices, p[None, :], w[None, :])
    return float(f[0])


def minimize_batch(phi_kind, cb, P, tol=1e-10, max_iter=200, cap=W_CAP):
    """Damped Newton on ``Phi(p_i, .)`` for every row ``p_i`` of ``P`` at once.

    Returns ``(W, values, grad_norms, iterations, unbounded)``. Rows whose
    iterate leaves the ball of radius ``cap`` are projected back onto it. Rows
    with a zero probability are always flagged as unbounded: there the infimum
    is only approached at infinity, and the returned point is whatever the
    solver reached before the gradient fell under ``tol`` or the cap was hit.
    """
    _check_phi(phi_kind)
    Y = cb.vertices
    P = np.atleast_2d(np.asarray(P, dtype=float))
    m, k = P.shape[0], cb.dim
    W = np.zeros((m, k))
    iters = np.zeros(m, dtype=int)
    unbounded = np.zeros(m, dtype=bool)
    active = np.arange(m)
    for it in range(max_iter):
        if active.size == 0:
            break
        Pa, Wa = P[active], W[active]
        f, g, curv = _objective(phi_kind, Y, Pa, Wa)
        gnorm = np.linalg.norm(g, axis=1)
        done = gnorm <= tol
        if done.all():
            break
        keep = ~done
        active, Pa, Wa, f, g, curv = active[keep], Pa[keep], Wa[keep], f[keep], g[keep], curv[keep]
        H = np.einsum("mt,ti,tj->mij", curv, Y, Y)
        # Near-singular Hessians (vanishing curvature along an escape direction)
        # fall back to steepest descent.
        eig_min = np.linalg.eigvalsh(H)[:, 0]
        singular = eig_min <= 1e-12 * np.maximum(np.abs(H).max(axis=(1, 2)), 1e-300)
        H[singular] = np.eye(k)
        d = -np.linalg.solve(H, g[..., None])[..., 0]
        slope = np.einsum("ij,ij->i", g, d)
        bad = ~(slope < 0)
        d[bad] = -g[bad]
        slope[bad] = -np.einsum("ij,ij->i", g[bad], g[bad])

        step = np.ones(active.size)
        pending = np.arange(active.size)
        W_new = Wa.copy()
        for _ in range(60):
            trial = Wa[pending] + step[pending, None] * d[pending]
            f_trial, _, _ = _objective(phi_kind, Y, Pa[pending], trial)
            slack = 4 * np.finfo(float).eps * np.abs(f[pending])
            ok = f_trial <= f[pending] + _ARMIJO * step[pending] * slope[pending] + slack
            W_new[pending[ok]] = trial[ok]
            pending = pending[~ok]
            if pending.size == 0:
                break
            step[pending] *= 0.5
        # rows that never satisfied the line search keep their iterate; they are stalled
        stalled = np.zeros(active.size, dtype=bool)
        stalled[pending] = True

        norms = np.linalg.norm(W_new, axis=1)
        over = norms > cap
        W_new[over] *= (cap / norms[over])[:, None]
        W[active] = W_new
        iters[active] = it + 1
        unbounded[active[over]] = True
        active = active[~(over | stalled)]

    unbounded |= (P <= 0).any(axis=1)
    f, g, _ = _objective(phi_kind, Y, P, W)
    return W, f, np.linalg.norm(g, axis=1), iters, unbounded


def inner_minimizer(phi_kind, cb, p, tol=1e-10, max_iter=200):
    """Minimise the inner risk over ``w`` for one probability vector ``p``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != cb.num_classes:
        raise ValueError(f"expected {cb.num_classes} probabilities, got {p.shape[0]}")
    p = check_simplex(p)
    W, f, gn, it, unb = minimize_batch(phi_kind, cb, p[None, :], tol=tol, max_iter=max_iter)
    return InnerMinimizerResult(W[0], float(f[0]), float(gn[0]), int(it[0]), bool(unb[0]))


def _sample_separated(rng, T, count, min_gap):
    out = []
    while sum(len(o) for o in out) < count:
        P = rng.dirichlet(np.ones(T), size=2 * count + 16)
        s = -np.sort(-P, axis=1)
        out.append(P[s[:, 0] - s[:, 1] >= min_gap])
    return np.concatenate(out)[:count]


def check_fisher_consistency(phi_kind, cb, num_samples=500, seed=0, min_gap=0.05):
    """Count random ``p`` (top-two gap >= ``min_gap``) whose minimiser decodes to a non-argmax class."""
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    rng = np.random.default_rng(seed)
    P = _sample_separated(rng, cb.num_classes, num_samples, min_gap)
    W, _, _, _, _ = minimize_batch(phi_kind, cb, P)
    wrong = np.flatnonzero(decode(cb, W) != np.argmax(P, axis=1))
    return CheckReport(int(wrong.size), num_samples, failures=[P[i] for i in wrong[:5]])


def check_monotonicity(phi_kind, cb, num_pairs=200, seed=0, eps=0.01, tol=1e-6):
    """Move mass ``eps`` onto a random class ``y`` and check ``<h(p), y>`` does not drop."""
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    T = cb.num_classes
    rng = np.random.default_rng(seed)
    before, after, targets = [], [], []
    while len(before) < num_pairs:
        p = rng.dirichlet(np.ones(T))
        y = int(rng.integers(T))
        donors = [k for k in range(T) if k != y and p[k] >= eps]
        if not donors:
            continue
        k = donors[int(rng.integers(len(donors)))]
        q = p.copy()
        q[y] += eps
        q[k] -= eps
        before.append(p)
        after.append(q)
        targets.append(y)
    targets = np.array(targets)
    W0, *_ = minimize_batch(phi_kind, cb, np.array(before))
    W1, *_ = minimize_batch(phi_kind, cb, np.array(after))
    Yt = cb.vertices[targets]
    drop = np.einsum("ij,ij->i", W0 - W1, Yt)
    bad = np.flatnonzero(drop > tol)
    return CheckReport(int(bad.size), num_pairs, worst=float(max(drop.max(), 0.0)),
                       failures=[(before[i], after[i], int(targets[i])) for i in bad[:5]])


def _compositions(total, parts):
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]])
    rows = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        rows.append(np.column_stack([np.full(len(rest), first), rest]))
    return np.concatenate(rows)


def _facet_points(T, y, j, gamma, U):
    """Map free coordinates ``U = (2 p_j, p_others...)`` (rows summing to 1-2γ) to ``p``."""
    P = np.empty((U.shape[0], T))
    others = [k for k in range(T) if k not in (y, j)]
    P[:, j] = U[:, 0] / 2
    P[:, y] = P[:, j] + 2 * gamma
    P[:, others] = U[:, 1:]
    return P


def _in_region(P, y, gamma, region):
    if region == "facet":
        return np.ones(P.shape[0], dtype=bool)
    rest = np.delete(P, y, axis=1)
    return (P[:, [y]] - rest >= 2 * gamma - 1e-12).all(axis=1)


def _facet_min(phi_kind, cb, y, j, gamma, resolution, region, refine_rounds=4, refine_points=11):
    T = cb.num_classes
    S = 1.0 - 2 * gamma
    # cell-centred lattice: stays off the facet's boundary, where some p_k = 0
    # and the minimiser does not exist
    U = S * (_compositions(resolution - 1, T - 1) + 0.5) / (resolution - 1 + 0.5 * (T - 1))

    def evaluate(U):
        P = _facet_points(T, y, j, gamma, U)
        P = P[_in_region(P, y, gamma, region)]
        if P.shape[0] == 0:
            return np.inf, None, False
        W, _, _, _, unb = minimize_batch(phi_kind, cb, P)
        M = decision_margin(cb, W)
        i = int(np.argmin(M))
        return float(M[i]), P[i], bool(unb[i])

    best, best_p, best_unb = evaluate(U)
    if best_p is None or T == 2:
        return best, best_p, best_unb
    h = S / (resolution - 1)
    others = [k for k in range(T) if k not in (y, j)]
    for _ in range(refine_rounds):
        u0 = np.concatenate([[2 * best_p[j]], best_p[others]])
        axes = [u0[i] + np.linspace(-h, h, refine_points) for i in range(T - 2)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, T - 2)
        last = S - grid.sum(axis=1)
        local = np.column_stack([grid, last])
        local = local[(local > 0).all(axis=1)]
        cand, cand_p, cand_unb = evaluate(local)
        if cand < best:
            best, best_p, best_unb = cand, cand_p, cand_unb
        h *= 2.0 / (refine_points - 1)
    return best, best_p, best_unb


def margin_transfer(phi_kind, cb, gamma, grid_resolution=200, region="facet"):
    """Grid estimate of ``max_{y,j} min { M(h(p)) : p in simplex, p_y - p_j = 2 gamma }``.

    ``region="facet"`` takes the constraint set exactly as written. With
    ``region="edge"`` the set is further restricted to ``p`` where ``y`` leads
    every other class by at least ``2 gamma``. Each facet minimum is taken
    over a uniform lattice and then refined by a few rounds of local zooming.
    """
    _check_phi(phi_kind)
    if not 0 < gamma <= 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2], got {gamma}")
    if grid_resolution < 10:
        raise ValueError("grid_resolution must be >= 10")
    if region not in ("facet", "edge"):
        raise ValueError(f"unknown region {region!r}")
    best = (-np.inf, None, False)
    for y, j in permutations(range(cb.num_classes), 2):
        cand = _facet_min(phi_kind, cb, y, j, gamma, grid_resolution, region)
        if cand[0] > best[0]:
            best = cand
    value, p, unb = best
    return MarginTransfer(gamma=gamma, m_gamma=value / 2, grid_resolution=grid_resolution,
                          margin_bound=value, region=region, argmin_p=p, unbounded=unb)
