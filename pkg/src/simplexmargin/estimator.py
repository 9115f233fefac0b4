"""scikit-learn compatible plug-in classifier on simplex codes."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .codec import build_codebook, decision_margin, decode
from .data import Dataset
from .features import LinearRffModel, sample_feature_map
from .losses import SurrogateLoss
from .trainer import GdConfig, train


class SimplexCodeClassifier(ClassifierMixin, BaseEstimator):
    """Linear model on random Fourier (or raw) features, trained by gradient descent
    on a surrogate loss over simplex-coded labels and decoded by largest projection.

    Parameters
    ----------
    loss : {"square", "logistic", "exponential"}
    features : {"rff", "linear"}
        ``"linear"`` uses the raw inputs, no intercept.
    n_components, bandwidth :
        Random Fourier feature count and Gaussian kernel bandwidth.
    lam : float
        Ridge coefficient on ``||W||^2``.
    step_size : float or None
        ``None`` picks ``step_scale / L`` from a smoothness estimate.
    max_epochs, tol, eval_every :
        Gradient-descent budget, gradient-norm stopping tolerance and trace cadence.
    n_classes : int or None
        Fix T explicitly; labels must then be integers in ``[0, n_classes)``.
    random_state : int or None
        Seed for the feature map.
    """

    def __init__(self, loss="square", features="rff", n_components=300, bandwidth=0.5, lam=1e-4,
                 step_size=None, step_scale=0.5, max_epochs=2000, tol=1e-7, eval_every=1,
                 n_classes=None, random_state=None):
        self.loss = loss
        self.features = features
        self.n_components = n_components
        self.bandwidth = bandwidth
        self.lam = lam
        self.step_size = step_size
        self.step_scale = step_scale
        self.max_epochs = max_epochs
        self.tol = tol
        self.eval_every = eval_every
        self.n_classes = n_classes
        self.random_state = random_state

    def fit(self, X, y, eval_set=None):
        """Fit on ``(X, y)``; ``eval_set=(X_test, y_test)`` fills the held-out columns of ``trace_``."""
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        SurrogateLoss.from_name(self.loss)
        if self.n_classes is None:
            self.classes_, codes = np.unique(y, return_inverse=True)
            if self.classes_.size < 2:
                raise ValueError("need at least two classes")
        else:
            self.classes_ = np.arange(int(self.n_classes))
            codes = np.asarray(y, dtype=int)
            if not np.array_equal(codes, y) or codes.min() < 0 or codes.max() >= self.n_classes:
                raise ValueError(f"labels must be integers in [0, {self.n_classes})")
        T = self.classes_.size
        self.codebook_ = build_codebook(T)
        self.n_features_in_ = X.shape[1]
        if self.features == "rff":
            fm = sample_feature_map(X.shape[1], self.n_components, self.bandwidth, self.random_state)
            init = LinearRffModel.zeros(fm, T)
        elif self.features == "linear":
            init = LinearRffModel.zeros(None, T, X.shape[1])
        else:
            raise ValueError(f"features must be 'rff' or 'linear', got {self.features!r}")
        test = None
        if eval_set is not None:
            Xt, yt = eval_set
            Xt = check_array(Xt)
            test = Dataset(Xt, self._encode(np.asarray(yt)), T)
        config = GdConfig(step_size=self.step_size, max_epochs=self.max_epochs, lam=self.lam,
                          stop_grad_norm=self.tol, eval_every=self.eval_every, step_scale=self.step_scale)
        self.model_, self.trace_ = train(Dataset(X, codes, T), test, init, self.loss, config)
        return self

    def _encode(self, y):
        idx = np.searchsorted(self.classes_, y)
        idx = np.clip(idx, 0, self.classes_.size - 1)
        if not np.all(self.classes_[idx] == y):
            raise ValueError("eval_set contains labels unseen during fit")
        return idx

    def decision_function(self, X):
        """Score vectors in R^(T-1), one row per sample."""
        check_is_fitted(self, "model_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.model_.predict(X)

    def predict(self, X):
        return self.classes_[decode(self.codebook_, self.decision_function(X))]

    def predict_margin(self, X):
        """Decision margin (top-two projection gap) of each prediction."""
        return decision_margin(self.codebook_, self.decision_function(X))

    @property
    def class_vectors_(self):
        """For ``features="linear"``: column k is the direction whose inner product with x scores class k."""
        check_is_fitted(self, "model_")
        if self.model_.feature_map is not None:
            raise AttributeError("class_vectors_ only exists for linear features")
        return self.model_.weights @ self.codebook_.vertices.T
