"""Random Fourier features for the Gaussian kernel and the linear code model on top of them."""

import struct
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted


class RandomFourierFeatures(TransformerMixin, BaseEstimator):
    """Cos-with-phase random features ``z(x) = sqrt(2/R) cos(Omega x + b)``.

    ``Omega`` has i.i.d. ``N(0, 1/bandwidth^2)`` entries and ``b`` is uniform on
    ``[0, 2 pi)``, so ``<z(x), z(x')>`` approximates
    ``exp(-||x - x'||^2 / (2 bandwidth^2))``.

    Parameters
    ----------
    n_components : int
        Number of random features R.
    bandwidth : float
        Gaussian kernel length scale.
    random_state : int or None
        Seed for the PCG64 generator that draws frequencies then phases.
    """

    def __init__(self, n_components=300, bandwidth=0.5, random_state=None):
        self.n_components = n_components
        self.bandwidth = bandwidth
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X)
        return self._sample(X.shape[1])

    def _sample(self, input_dim):
        if int(input_dim) < 1 or int(self.n_components) < 1:
            raise ValueError("input_dim and n_components must be >= 1")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        rng = np.random.default_rng(self.random_state)
        R = int(self.n_components)
        self.frequencies_ = rng.normal(0.0, 1.0 / self.bandwidth, size=(R, int(input_dim)))
        self.phases_ = rng.uniform(0.0, 2 * np.pi, size=R)
        self.n_features_in_ = int(input_dim)
        return self

    def transform(self, X):
        check_is_fitted(self, "frequencies_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} input features, got {X.shape[1]}")
        return np.sqrt(2.0 / self.frequencies_.shape[0]) * np.cos(X @ self.frequencies_.T + self.phases_)

    @property
    def seed(self):
        return self.random_state


def sample_feature_map(d, R, bandwidth, seed):
    """A fitted :class:`RandomFourierFeatures` for ``d``-dimensional inputs."""
    return RandomFourierFeatures(n_components=R, bandwidth=bandwidth, random_state=seed)._sample(d)


@dataclass
class LinearRffModel:
    """``f(x) = W^T z(x)``; ``feature_map=None`` means ``z`` is the identity."""

    feature_map: RandomFourierFeatures
    weights: np.ndarray

    @property
    def input_dim(self):
        if self.feature_map is None:
            return self.weights.shape[0]
        return self.feature_map.n_features_in_

    @property
    def output_dim(self):
        return self.weights.shape[1]

    def features(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs of shape (n, {self.input_dim}), got {X.shape}")
        return X if self.feature_map is None else self.feature_map.transform(X)

    def predict(self, X):
        """Score vectors in R^(T-1); a 1-d ``X`` is treated as a single point."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return self.features(X[None, :])[0] @ self.weights
        return self.features(X) @ self.weights

    @classmethod
    def zeros(cls, feature_map, num_classes, input_dim=None):
        rows = input_dim if feature_map is None else feature_map.frequencies_.shape[0]
        return cls(feature_map, np.zeros((rows, num_classes - 1)))


# Binary layout, all little-endian:
#   8s   magic b"SMRFMDL1"
#   u8   kind (0 = identity features, 1 = random Fourier features)
#   u8   has_seed
#   u64  input_dim d, u64 num_features R, u64 output_dim T-1
#   u64  seed (0 if unset), f64 bandwidth (0 for identity)
#   f64  frequencies R*d row-major, f64 phases R   (RFF only)
#   f64  weights R*(T-1) row-major
_MAGIC = b"SMRFMDL1"
_HEADER = struct.Struct("<8sBBQQQQd")


def save_model(model, path):
    fm = model.feature_map
    R, k = model.weights.shape
    if fm is None:
        head = _HEADER.pack(_MAGIC, 0, 0, R, R, k, 0, 0.0)
        body = [model.weights]
    else:
        has_seed = fm.random_state is not None
        seed = int(fm.random_state) if has_seed else 0
        head = _HEADER.pack(_MAGIC, 1, has_seed, fm.n_features_in_, R, k, seed, float(fm.bandwidth))
        body = [fm.frequencies_, fm.phases_, model.weights]
    with open(path, "wb") as fh:
        fh.write(head)
        for arr in body:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated model file")
    magic, kind, has_seed, d, R, k, seed, bandwidth = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a model file")
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(float)
    expected = R * k if kind == 0 else R * d + R + R * k
    if flat.size != expected:
        raise ValueError(f"{path}: expected {expected} values, found {flat.size}")
    if kind == 0:
        return LinearRffModel(None, flat.reshape(R, k).copy())
    fm = RandomFourierFeatures(n_components=R, bandwidth=bandwidth, random_state=seed if has_seed else None)
    fm.frequencies_ = flat[: R * d].reshape(R, d).copy()
    fm.phases_ = flat[R * d: R * d + R].copy()
    fm.n_features_in_ = d
    return LinearRffModel(fm, flat[R * d + R:].reshape(R, k).copy())
