"""Full-batch gradient descent on the ridge-regularised empirical surrogate risk."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .codec import build_codebook, decode
from .exceptions import DivergedError
from .features import LinearRffModel
from .losses import SurrogateLoss

DIVERGENCE_RISK = 1e6
TRACE_COLUMNS = ("epoch", "train_surrogate", "test_surrogate", "test_zero_one")


@dataclass(frozen=True)
class GdConfig:
    """Gradient descent settings.

    ``step_size=None`` means ``0.5 / L`` with ``L`` the smoothness estimate of
    :func:`smoothness_constant`.
    """

    step_size: float = None
    max_epochs: int = 2000
    lam: float = 1e-4
    stop_grad_norm: float = 1e-7
    eval_every: int = 1
    step_scale: float = 0.5

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if int(self.max_epochs) != self.max_epochs or self.max_epochs < 1:
            raise ValueError("max_epochs must be an integer >= 1")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.stop_grad_norm < 0:
            raise ValueError("stop_grad_norm must be non-negative")
        if int(self.eval_every) != self.eval_every or self.eval_every < 1:
            raise ValueError("eval_every must be an integer >= 1")


@dataclass
class TrainTrace:
    """One row per evaluated epoch.

    ``train_surrogate`` is the regularised training objective (the quantity GD
    decreases); ``test_surrogate`` is the plain mean surrogate loss on held-out
    data and ``test_zero_one`` the held-out misclassification rate.
    """

    epochs: list = field(default_factory=list)
    stopped_early: bool = False

    def append(self, epoch, train_surrogate, test_surrogate, test_zero_one):
        self.epochs.append((int(epoch), float(train_surrogate), float(test_surrogate), float(test_zero_one)))

    def column(self, name):
        return np.array([row[TRACE_COLUMNS.index(name)] for row in self.epochs])

    def first_zero_error_epoch(self):
        """First logged epoch with zero held-out 0-1 error (None if never)."""
        for e, _, _, z in self.epochs:
            if z == 0:
                return e
        return None

    def surrogate_settle_epoch(self, rel=0.01):
        """First logged epoch from which the held-out surrogate stays within ``rel`` of its final value."""
        vals = self.column("test_surrogate")
        final = vals[-1]
        outside = np.flatnonzero(np.abs(vals - final) > rel * abs(final))
        idx = 0 if outside.size == 0 else outside[-1] + 1
        return self.epochs[idx][0]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for row in self.epochs:
                w.writerow([row[0]] + [repr(v) for v in row[1:]])


def _features_and_codes(model, dataset):
    Z = model.features(dataset.points)
    return Z, dataset.labels


def empirical_risk_and_grad(model, dataset, loss, lam, cb=None):
    """``(1/n) sum_i loss(f(x_i), y_i) + lam ||W||^2`` and its gradient in ``W``."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    loss = SurrogateLoss.from_name(loss)
    cb = cb or build_codebook(dataset.num_classes)
    Z, y = _features_and_codes(model, dataset)
    return _risk_and_grad(Z, y, model.weights, loss, lam, cb)


def _risk_and_grad(Z, y, W, loss, lam, cb):
    n = Z.shape[0]
    vals, G = loss.value_and_grad(cb, Z @ W, y)
    risk = vals.mean() + lam * np.sum(W * W)
    return risk, Z.T @ G / n + 2 * lam * W


def gram_top_eigenvalue(Z):
    """Largest eigenvalue of ``Z^T Z / n``.

    The Gram matrix is only (R, R), so a dense symmetric eigensolve is cheap and,
    unlike power iteration, cannot underestimate when the top eigenvalues cluster.
    """
    n = Z.shape[0]
    return float(np.linalg.eigvalsh(Z.T @ Z / n)[-1])


def smoothness_constant(Z, loss, lam):
    loss = SurrogateLoss.from_name(loss)
    return loss.smoothness * gram_top_eigenvalue(Z) + 2 * lam


def train(dataset_train, dataset_test, model_init, loss, config=None):
    """Run full-batch gradient descent and return ``(model, trace)``.

    The trace is logged at epoch 0 and every ``eval_every`` epochs, plus the
    last epoch. Raises :class:`DivergedError` if the objective exceeds 1e6 or
    becomes non-finite.
    """
    config = config or GdConfig()
    loss = SurrogateLoss.from_name(loss)
    if len(dataset_train) == 0:
        raise ValueError("empty training set")
    if dataset_test is not None and dataset_test.num_classes != dataset_train.num_classes:
        raise ValueError("train and test sets disagree on the number of classes")
    cb = build_codebook(dataset_train.num_classes)
    Z, y = _features_and_codes(model_init, dataset_train)
    if dataset_test is not None:
        Zt, yt = _features_and_codes(model_init, dataset_test)
    W = np.array(model_init.weights, dtype=float, copy=True)
    if W.shape != (Z.shape[1], cb.dim):
        raise ValueError(f"weights must have shape {(Z.shape[1], cb.dim)}, got {W.shape}")
    step = config.step_size
    if step is None:
        step = config.step_scale / smoothness_constant(Z, loss, config.lam)

    trace = TrainTrace()

    def log(epoch, risk):
        if dataset_test is None:
            trace.append(epoch, risk, np.nan, np.nan)
            return
        P = Zt @ W
        vals, _ = loss.value_and_grad(cb, P, yt)
        trace.append(epoch, risk, vals.mean(), np.mean(decode(cb, P) != yt))

    risk, grad = _risk_and_grad(Z, y, W, loss, config.lam, cb)
    log(0, risk)
    for epoch in range(1, config.max_epochs + 1):
        W -= step * grad
        risk, grad = _risk_and_grad(Z, y, W, loss, config.lam, cb)
        if not np.isfinite(risk) or risk > DIVERGENCE_RISK:
            raise DivergedError(epoch, risk)
        converged = np.linalg.norm(grad) <= config.stop_grad_norm
        if epoch % config.eval_every == 0 or epoch == config.max_epochs or converged:
            log(epoch, risk)
        if converged:
            trace.stopped_early = True
            break
    return LinearRffModel(model_init.feature_map, W), trace
