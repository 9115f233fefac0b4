"""Self-check suite run by ``simplexmargin run`` with ``experiment=properties``.

Each check returns a :class:`PropertyResult`; :func:`run_properties` collects
them into a text report and an exit code (0 iff every check passed).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .codec import barycenter, build_codebook, decision_margin, decode
from .data import gen_hard_margin, gen_soft_margin, geometric_margin
from .inner_risk import check_fisher_consistency, check_monotonicity, inner_minimizer, margin_transfer
from .losses import LOSS_NAMES, PHI_KINDS, SurrogateLoss
from .metrics import comparison_radius, hamming_distance, zero_one_risk
from .rng import derive_seed, name_key

# Textbook coordinates of one rotation of the 3- and 4-class codebooks, in closed form.
REFERENCE_VERTICES = {
    3: np.array([[1.0, 0.0], [-0.5, np.sqrt(3) / 2], [-0.5, -np.sqrt(3) / 2]]),
    4: np.array([[1.0, 0.0, 0.0], [-1 / 3, 2 * np.sqrt(2) / 3, 0.0],
                 [-1 / 3, -np.sqrt(2) / 3, np.sqrt(2 / 3)], [-1 / 3, -np.sqrt(2) / 3, -np.sqrt(2 / 3)]]),
}


@dataclass
class PropertyResult:
    name: str
    checked: int
    violations: int
    detail: str = ""
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return self.violations == 0


def default_grad_fn(loss, cb, W, labels):
    return SurrogateLoss.from_name(loss).value_and_grad(cb, W, labels)


def check_codebooks(T_values=range(2, 17), tol=1e-12):
    bad, checked = [], 0
    for T in T_values:
        V = build_codebook(T).vertices
        G = V @ V.T
        target = np.full((T, T), -1.0 / (T - 1))
        np.fill_diagonal(target, 1.0)
        checked += 1
        err = max(np.abs(G - target).max(), np.abs(V.sum(axis=0)).max())
        if err > tol:
            bad.append((T, err))
    return PropertyResult("codebook invariants T=2..16", checked, len(bad), failures=bad)


def reference_alignment(T):
    """Gram-matrix gap and Procrustes residual between the built codebook and :data:`REFERENCE_VERTICES`.

    Equal Gram matrices mean the two vertex sets differ by one orthogonal map;
    the residual of the best such map is returned as a direct confirmation.
    """
    V = build_codebook(T).vertices
    R = REFERENCE_VERTICES[T]
    gram_gap = float(np.abs(V @ V.T - R @ R.T).max())
    U, _, Vt = np.linalg.svd(V.T @ R)
    Q = U @ Vt
    return gram_gap, float(np.abs(V @ Q - R).max())


def check_gradients(grad_fn=None, num_checks=100, h=1e-5, rtol=1e-5, seed=0, T_values=(2, 3, 4, 5)):
    """Central finite differences against the analytic per-sample gradient, for every loss."""
    grad_fn = grad_fn or default_grad_fn
    rng = np.random.default_rng(seed)
    bad, checked, worst = [], 0, 0.0
    for loss in LOSS_NAMES:
        for i in range(num_checks):
            T = T_values[i % len(T_values)]
            cb = build_codebook(T)
            w = rng.normal(size=(1, T - 1))
            y = rng.integers(T, size=1)
            _, g = grad_fn(loss, cb, w, y)
            fd = np.empty(T - 1)
            for k in range(T - 1):
                e = np.zeros((1, T - 1))
                e[0, k] = h
                fp, _ = grad_fn(loss, cb, w + e, y)
                fm, _ = grad_fn(loss, cb, w - e, y)
                fd[k] = (fp[0] - fm[0]) / (2 * h)
            rel = np.linalg.norm(fd - g[0]) / max(np.linalg.norm(fd), np.linalg.norm(g[0]), 1e-12)
            worst = max(worst, rel)
            checked += 1
            if rel > rtol:
                bad.append((loss, T, rel))
    return PropertyResult("finite-difference gradients", checked, len(bad), f"worst rel err {worst:.2e}", bad)


def binary_minimizer_closed_form(phi_kind, p):
    """Known minimiser of ``p phi(w) + (1-p) phi(-w)`` for the two-class code."""
    logit = np.log(p / (1 - p))
    return logit if phi_kind == "logistic" else 0.5 * logit


def check_binary_inner_risk(tol=1e-6, gamma_tol=1e-4, gammas=(0.1, 0.25, 0.4), resolution=200):
    cb = build_codebook(2)
    bad, checked = [], 0
    for kind in PHI_KINDS:
        for p in np.arange(0.55, 0.951, 0.05):
            w = inner_minimizer(kind, cb, [p, 1 - p]).argmin_w[0]
            checked += 1
            err = abs(w - binary_minimizer_closed_form(kind, p))
            if err > tol:
                bad.append((kind, p, err))
        for g in gammas:
            m = margin_transfer(kind, cb, g, grid_resolution=resolution).m_gamma
            # h is odd in the logit, so max{h(1/2+g), -h(1/2-g)} = h(1/2+g)
            ref = max(binary_minimizer_closed_form(kind, 0.5 + g), -binary_minimizer_closed_form(kind, 0.5 - g))
            checked += 1
            if abs(m - ref) > gamma_tol:
                bad.append((kind, g, m, ref))
    return PropertyResult("two-class inner risk closed forms", checked, len(bad), failures=bad)


def check_consistency_and_monotonicity(T_values=(2, 3, 4), num_samples=500, num_pairs=200, seed=0):
    bad, checked = [], 0
    for kind in PHI_KINDS:
        for T in T_values:
            cb = build_codebook(T)
            fc = check_fisher_consistency(kind, cb, num_samples=num_samples, seed=seed)
            mo = check_monotonicity(kind, cb, num_pairs=num_pairs, seed=seed)
            checked += fc.checked + mo.checked
            if fc.violations:
                bad.append(("consistency", kind, T, fc.violations))
            if mo.violations:
                bad.append(("monotonicity", kind, T, mo.violations))
    return PropertyResult("consistency and monotonicity of inner minimisers", checked,
                          sum(b[-1] for b in bad), failures=bad)


def check_argmax_equivalence(T_values=range(2, 9), count=1000, seed=0):
    rng = np.random.default_rng(seed)
    bad, checked = 0, 0
    for T in T_values:
        cb = build_codebook(T)
        P = rng.dirichlet(np.ones(T), size=count)
        s = -np.sort(-P, axis=1)
        P = P[s[:, 0] - s[:, 1] > 1e-9]
        bad += int(np.sum(decode(cb, barycenter(cb, P)) != np.argmax(P, axis=1)))
        checked += len(P)
    return PropertyResult("barycenter decodes to argmax", checked, bad)


def _random_linear_classifier(rng, T):
    W = rng.normal(size=(2, T - 1))
    cb = build_codebook(T)
    return lambda X: decode(cb, np.atleast_2d(X) @ W)


def check_risk_difference(num_pairs=50, n_eval=10_000, seed=0, T=3, delta=0.1, sigmas=3.0):
    """``|R(c1) - R(c2)| <= r(c1, c2)`` with risks and disagreement measured on independent samples."""
    rng = np.random.default_rng(seed)
    bad, worst = [], -np.inf
    for i in range(num_pairs):
        c1 = _random_linear_classifier(rng, T)
        c2 = _random_linear_classifier(rng, T)
        risk_set = gen_hard_margin(n_eval, T, delta, seed=derive_seed(seed, name_key("risk-diff"), i, 0))
        dist_set = gen_hard_margin(n_eval, T, delta, seed=derive_seed(seed, name_key("risk-diff"), i, 1))
        r1, r2 = zero_one_risk(c1, risk_set), zero_one_risk(c2, risk_set)
        d = hamming_distance(c1, c2, dist_set.points)
        pooled = np.sqrt(r1.std_error ** 2 + r2.std_error ** 2 + d * (1 - d) / n_eval)
        slack = abs(r1.value - r2.value) - d - sigmas * pooled
        worst = max(worst, slack)
        if slack > 0:
            bad.append((i, r1.value, r2.value, d))
    return PropertyResult("risk difference bounded by disagreement", num_pairs, len(bad),
                          f"worst slack {worst:.2e}", bad)


def check_comparison_radius(num_checks=10_000, seed=0, T_values=(2, 3, 4, 5, 8), atol=1e-12):
    """Disagreeing decodes imply ``||w1 - w2|| >= radius * M(w1)``, over random pairs at mixed scales."""
    rng = np.random.default_rng(seed)
    bad, checked = [], 0
    per = num_checks // len(T_values)
    for T in T_values:
        cb = build_codebook(T)
        n = per if T != T_values[-1] else num_checks - per * (len(T_values) - 1)
        w1 = rng.normal(size=(n, T - 1))
        scale = 10.0 ** rng.uniform(-3, 1, size=(n, 1))
        w2 = w1 + scale * rng.normal(size=(n, T - 1))
        differ = decode(cb, w1) != decode(cb, w2)
        gap = np.linalg.norm(w1 - w2, axis=1) - comparison_radius(T) * decision_margin(cb, w1)
        idx = np.flatnonzero(differ & (gap < -atol))
        checked += n
        bad.extend((T, float(gap[i])) for i in idx[:5])
    return PropertyResult("comparison radius", checked, len(bad), failures=bad)


def check_generators(seed=0, n=5000, p_floor=1e-3):
    """Hard margin: no point closer than delta to a boundary (in margin units).
    Soft margin: recorded and geometric margins agree, and follow the t^alpha law (KS test)."""
    bad, checked = [], 0
    for delta in (0.1, 0.2):
        ds = gen_hard_margin(n, 3, delta, seed=derive_seed(seed, name_key("gen-hard"), int(delta * 100)))
        checked += 1
        if geometric_margin(3, ds.points).min() < delta - 1e-12:
            bad.append(("hard", delta))
    for alpha in (0.5, 1.0, 2.0, 4.0):
        ds = gen_soft_margin(n, 3, alpha, seed=derive_seed(seed, name_key("gen-soft"), int(alpha * 10)))
        m = ds.meta["margin"]
        checked += 2
        if np.abs(geometric_margin(3, ds.points) - m).max() > 1e-9:
            bad.append(("soft-geometry", alpha))
        p = stats.kstest(m, lambda t: np.clip(t, 0, 1) ** alpha).pvalue
        if p < p_floor:
            bad.append(("soft-cdf", alpha, p))
    return PropertyResult("generator margin laws", checked, len(bad), failures=bad)


def run_properties(cfg=None, grad_fn=None):
    """Run every check; returns ``(results, report_text, exit_code)``."""
    seed = 0 if cfg is None else int(cfg.seed % (2 ** 32))
    results = [
        check_codebooks(),
        check_argmax_equivalence(seed=seed),
        check_gradients(grad_fn=grad_fn, seed=seed),
        check_binary_inner_risk(),
        check_consistency_and_monotonicity(seed=seed),
        check_risk_difference(seed=seed),
        check_comparison_radius(seed=seed),
        check_generators(seed=seed),
    ]
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = f" ({r.detail})" if r.detail else ""
        lines.append(f"{status} {r.name}: {r.violations} violations / {r.checked} checked{extra}")
        for f in r.failures[:5]:
            lines.append(f"    {f}")
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return results, "\n".join(lines) + "\n", 0 if failed == 0 else 1
