"""Synthetic planar datasets with hard or polynomial (soft) margins.

The unit disk is split into T equal angular sectors; sector ``k`` is centred on
angle ``pi/2 - pi/T + 2 pi k / T``. For T=3 the sector centres point along the
codebook vertices, so the scaled identity ``(2/sqrt(3)) x`` is a score field whose
decision margin equals twice the distance to the nearest sector boundary.
Labels are noiseless, hence the Bayes rule is "which sector" and the Bayes risk is 0.
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .codec import build_codebook
from .exceptions import InfeasibleError

SOFT_ALONG_RANGE = (0.3, 0.85)


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    T: int = 3
    delta: float = None
    alpha: float = None

    def __post_init__(self):
        if self.kind not in ("hard", "soft"):
            raise ValueError(f"kind must be 'hard' or 'soft', got {self.kind!r}")
        if int(self.T) != self.T or self.T < 2:
            raise ValueError("T must be an integer >= 2")
        if self.kind == "hard" and not (self.delta is not None and 0 < self.delta < 0.5):
            raise ValueError(f"hard margin needs 0 < delta < 0.5, got {self.delta}")
        if self.kind == "soft" and not (self.alpha is not None and self.alpha > 0):
            raise ValueError(f"soft margin needs alpha > 0, got {self.alpha}")


@dataclass
class Dataset:
    """Labelled sample; ``spec`` and ``seed`` record the generator when there is one."""

    points: np.ndarray
    labels: np.ndarray
    num_classes: int
    spec: DistributionSpec = None
    seed: int = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.points.ndim != 2 or self.points.shape[0] != self.labels.shape[0]:
            raise ValueError("points must be (n, d) with one label per row")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels out of range")

    def __len__(self):
        return self.labels.shape[0]


def sector_centers(T):
    return np.pi / 2 - np.pi / T + 2 * np.pi * np.arange(T) / T


def _unit(angles):
    return np.column_stack([np.cos(angles), np.sin(angles)])


def bayes_classify(spec, X):
    """Sector containing each point (exact boundary ties go to the lowest index)."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    out = np.argmax(X @ _unit(sector_centers(spec.T)).T, axis=1)
    return int(out[0]) if single else out


def boundary_distance(T, X):
    """Euclidean distance from each point to the nearest sector-boundary ray."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    r = np.hypot(X[:, 0], X[:, 1])
    cos_off = np.max(X @ _unit(sector_centers(T)).T, axis=1) / np.where(r > 0, r, 1.0)
    off = np.arccos(np.clip(cos_off, -1.0, 1.0))
    return r * np.sin(np.clip(np.pi / T - off, 0.0, None))


def geometric_margin(T, X):
    """Twice the boundary distance; the decision margin of :func:`sector_field`."""
    return 2.0 * boundary_distance(T, X)


def sector_field(T):
    """Score field ``R^2 -> R^(T-1)`` decoding to the sector with margin :func:`geometric_margin`.

    Only T=2 and T=3 admit such a linear field in two dimensions.
    """
    if T == 2:
        u0 = _unit(sector_centers(2))[0]
        return lambda X: np.atleast_2d(X) @ u0[:, None]
    if T == 3:
        cb = build_codebook(3)
        assert np.allclose(cb.vertices, _unit(sector_centers(3)))
        return lambda X: (2 / np.sqrt(3)) * np.atleast_2d(np.asarray(X, dtype=float))
    raise ValueError("sector_field is only defined for T in {2, 3}")


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return int(n)


def gen_hard_margin(n, T=3, delta=0.1, seed=None, max_rejection=0.99):
    """Uniform points on the unit disk, minus a band of half-width ``delta/2`` around every boundary."""
    n = _check_n(n)
    spec = DistributionSpec("hard", T=T, delta=delta)
    rng = np.random.default_rng(seed)
    batch = max(2 * n, 1024)
    kept, drawn, total = [], 0, 0
    while total < n:
        r = np.sqrt(rng.uniform(size=batch))
        theta = rng.uniform(0, 2 * np.pi, size=batch)
        X = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        X = X[boundary_distance(T, X) >= delta / 2]
        drawn += batch
        if not kept and X.shape[0] <= (1 - max_rejection) * batch:
            raise InfeasibleError(f"delta={delta} rejects {1 - X.shape[0] / batch:.1%} of draws")
        kept.append(X)
        total += X.shape[0]
    X = np.concatenate(kept)[:n]
    return Dataset(X, bayes_classify(spec, X), T, spec, seed=seed, meta={"drawn": drawn})


def _soft_along_range(T):
    lo = max(SOFT_ALONG_RANGE[0], 0.5 / np.tan(np.pi / T))
    if lo >= SOFT_ALONG_RANGE[1]:
        raise InfeasibleError(f"sectors too narrow for the soft-margin layout at T={T}")
    return lo, SOFT_ALONG_RANGE[1]


def gen_soft_margin(n, T=3, alpha=1.0, seed=None):
    """Points whose margin ``M`` has CDF ``P{M <= t} = t^alpha`` on (0, 1].

    A margin ``m = U^(1/alpha)`` is drawn, then the point is put at distance
    ``m/2`` from a uniformly chosen boundary ray, on a uniformly chosen side,
    at a position along the ray uniform on ``SOFT_ALONG_RANGE`` (raised for
    T >= 4 so the chosen ray stays the nearest one).
    """
    n = _check_n(n)
    spec = DistributionSpec("soft", T=T, alpha=alpha)
    rng = np.random.default_rng(seed)
    lo, hi = _soft_along_range(T)
    m = rng.uniform(size=n) ** (1.0 / alpha)
    b = rng.integers(T, size=n)
    side = rng.integers(2, size=n)
    s = rng.uniform(lo, hi, size=n)
    X = _soft_points(T, b, side, s, m)
    labels = np.where(side == 1, b, (b - 1) % T)
    return Dataset(X, labels, T, spec, seed=seed, meta={"margin": m})


def _soft_points(T, b, side, s, m):
    beta = sector_centers(T)[b] - np.pi / T  # boundary b opens sector b
    along = _unit(beta)
    normal = np.column_stack([-along[:, 1], along[:, 0]]) * np.where(side == 1, 1.0, -1.0)[:, None]
    return s[:, None] * along + (m / 2)[:, None] * normal


def soft_margin_linear_risk(spec, class_vectors):
    """Exact misclassification risk of ``x -> argmax_k <x, v_k>`` under a soft-margin distribution.

    ``class_vectors`` is (2, T): column k is ``v_k``. For a model ``f(x) = W^T x``
    decoded with codebook ``Y`` pass ``W @ Y.T``. Along every boundary and side the
    correctly classified margins form an interval ``[s L, s H]`` (linear scores
    through the origin), so the risk is a 1-d integral over the along-ray position.
    """
    if spec.kind != "soft":
        raise ValueError("exact risk is only available for the soft-margin family")
    V = np.asarray(class_vectors, dtype=float)
    T, alpha = spec.T, spec.alpha
    lo, hi = _soft_along_range(T)
    total = 0.0
    for b in range(T):
        for side in (0, 1):
            label = b if side == 1 else (b - 1) % T
            u = _soft_points(T, np.array([b]), np.array([side]), np.array([1.0]), np.array([0.0]))[0]
            nrm = _soft_points(T, np.array([b]), np.array([side]), np.array([0.0]), np.array([2.0]))[0]
            L, H = 0.0, np.inf
            for k in range(T):
                if k == label:
                    continue
                diff = V[:, label] - V[:, k]
                a, c = u @ diff, (nrm @ diff) / 2
                # correct iff s*a + m*c > 0, i.e. a bound on m/s
                if c > 0:
                    L = max(L, -a / c)
                elif c < 0:
                    H = min(H, -a / c)
                elif a <= 0:
                    H = -np.inf

            def err(s):
                if H <= L:
                    return 1.0
                top = min(1.0, s * H) if np.isfinite(H) else 1.0
                bot = min(1.0, max(0.0, s * L))
                return 1.0 - max(0.0, top ** alpha - bot ** alpha)

            brk = [1 / x for x in (L, H) if np.isfinite(x) and x > 0 and lo < 1 / x < hi]
            val, _ = integrate.quad(err, lo, hi, points=brk or None, limit=200, epsabs=1e-14, epsrel=1e-10)
            total += val / (hi - lo)
    return total / (2 * T)


def save_dataset(ds, path):
    """CSV with header ``x1,...,xd,label``; metadata goes to ``<path>.meta`` as key=value lines."""
    path = Path(path)
    d = ds.points.shape[1]
    header = ",".join([f"x{i + 1}" for i in range(d)] + ["label"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for x, y in zip(ds.points, ds.labels):
            fh.write(",".join(repr(float(v)) for v in x) + f",{int(y)}\n")
    meta = {"T": ds.num_classes}
    if ds.spec is not None:
        meta.update((k, v) for k, v in asdict(ds.spec).items() if v is not None)
    meta.update(n=len(ds), seed="" if ds.seed is None else ds.seed)
    with open(str(path) + ".meta", "w") as fh:
        for k, v in meta.items():
            fh.write(f"{k}={v}\n")


def load_dataset(path):
    path = Path(path)
    meta = {}
    with open(str(path) + ".meta") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                k, _, v = line.partition("=")
                meta[k.strip()] = v.strip()
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    T = int(meta["T"])
    spec = None
    if "kind" in meta:
        spec = DistributionSpec(
            meta["kind"], T=T,
            delta=float(meta["delta"]) if "delta" in meta else None,
            alpha=float(meta["alpha"]) if "alpha" in meta else None,
        )
    seed = int(meta["seed"]) if meta.get("seed") else None
    return Dataset(raw[:, :-1], raw[:, -1].astype(int), T, spec, seed=seed)
