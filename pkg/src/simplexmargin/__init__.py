"""Plug-in classifiers on simplex label codes: codebook, surrogate losses,
inner-risk analysis, random-feature models, synthetic margin data and experiments."""

from .codec import Codebook, barycenter, build_codebook, decision_margin, decode
from .data import Dataset, DistributionSpec, gen_hard_margin, gen_soft_margin
from .estimator import SimplexCodeClassifier
from .exceptions import ConfigError, DivergedError, InfeasibleError, InsufficientDataError
from .features import LinearRffModel, RandomFourierFeatures, load_model, save_model
from .inner_risk import inner_minimizer, inner_risk, margin_transfer
from .losses import SurrogateLoss, loss_value_and_grad, phi_value_and_derivatives
from .rates import RateFit, exp_decay_fit, loglog_slope
from .trainer import GdConfig, TrainTrace, train

__version__ = "0.1.0"

__all__ = [
    "Codebook", "build_codebook", "decode", "decision_margin", "barycenter",
    "SurrogateLoss", "phi_value_and_derivatives", "loss_value_and_grad",
    "inner_risk", "inner_minimizer", "margin_transfer",
    "RandomFourierFeatures", "LinearRffModel", "save_model", "load_model",
    "GdConfig", "TrainTrace", "train",
    "Dataset", "DistributionSpec", "gen_hard_margin", "gen_soft_margin",
    "RateFit", "loglog_slope", "exp_decay_fit",
    "SimplexCodeClassifier",
    "ConfigError", "DivergedError", "InfeasibleError", "InsufficientDataError",
]
