"""Flat ``key=value`` experiment configuration.

One setting per line, ``#`` starts a comment, lists are comma separated
(``deltas=0.1,0.2``). Unset keys take per-experiment defaults.
"""

from dataclasses import dataclass, fields, replace

from .exceptions import ConfigError
from .losses import LOSS_NAMES
from .rng import DEFAULT_SEED

EXPERIMENTS = ("hard-margin", "soft-margin", "hard-margin-sweep", "properties")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "hard-margin"
    losses: tuple = ("square", "logistic", "exponential")
    deltas: tuple = (0.1, 0.2)
    alphas: tuple = (0.5, 1.0, 2.0, 3.0, 4.0)
    n_train: int = 500
    ns: tuple = (250, 500, 1000, 2000, 4000)
    n_test: int = 2000
    repeats: int = 20
    seed: int = DEFAULT_SEED
    model: str = "rff"
    num_features: int = 300
    bandwidth: float = 0.5
    lam: float = 1e-4
    step_size: float = None
    step_scale: float = 0.5
    max_epochs: int = 2000
    stop_grad_norm: float = 1e-7
    eval_every: int = 1
    num_classes: int = 3
    min_fit_points: int = 4
    risk: str = "exact"
    out: str = "results"
    svg: bool = False


# values that differ from the dataclass defaults, per experiment
EXPERIMENT_DEFAULTS = {
    "hard-margin": {},
    "soft-margin": dict(losses=("logistic",), model="linear", lam=1e-2, max_epochs=20000, eval_every=1000),
    "hard-margin-sweep": dict(losses=("square",), ns=(100, 200, 400, 800, 1600), n_test=20000,
                              repeats=20, eval_every=1000, min_fit_points=2),
    "properties": {},
}

_LIST_FIELDS = {"losses": str, "deltas": float, "alphas": float, "ns": int}
_INT_FIELDS = {"n_train", "n_test", "repeats", "seed", "num_features", "max_epochs",
               "eval_every", "num_classes", "min_fit_points"}
_FLOAT_FIELDS = {"bandwidth", "lam", "step_size", "step_scale", "stop_grad_norm"}
_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def _parse_int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _parse_float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None


def _parse_value(key, text):
    if key in _LIST_FIELDS:
        items = [t.strip() for t in text.split(",") if t.strip()]
        if not items:
            raise ConfigError(key, "empty list")
        kind = _LIST_FIELDS[key]
        if kind is int:
            return tuple(_parse_int(key, t) for t in items)
        if kind is float:
            return tuple(_parse_float(key, t) for t in items)
        return tuple(items)
    if key in _INT_FIELDS:
        return _parse_int(key, text)
    if key in _FLOAT_FIELDS:
        if key == "step_size" and text.lower() in ("", "auto", "none"):
            return None
        return _parse_float(key, text)
    if key == "svg":
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(key, f"expected a boolean, got {text!r}")
        return low in ("true", "1", "yes")
    return text


def parse_config_text(text):
    """Parse config text into a validated :class:`ExperimentConfig`."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELD_NAMES:
            raise ConfigError(key, "unknown key")
        raw[key] = _parse_value(key, value.strip())
    return build_config(**raw)


def load_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read())


def build_config(**overrides):
    experiment = overrides.get("experiment", "hard-margin")
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}")
    values = dict(EXPERIMENT_DEFAULTS[experiment])
    values.update(overrides)
    unknown = set(values) - _FIELD_NAMES
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def with_overrides(cfg, **kw):
    """Copy with the non-None keyword values replaced, re-validated."""
    cfg = replace(cfg, **{k: v for k, v in kw.items() if v is not None})
    validate(cfg)
    return cfg


def validate(cfg):
    def need(ok, key, msg):
        if not ok:
            raise ConfigError(key, msg)

    need(cfg.experiment in EXPERIMENTS, "experiment", f"unknown experiment {cfg.experiment!r}")
    need(len(cfg.losses) > 0, "losses", "at least one loss required")
    for name in cfg.losses:
        need(name in LOSS_NAMES, "losses", f"unknown loss {name!r}")
    for d in cfg.deltas:
        need(0 < d < 0.5, "deltas", f"delta must lie in (0, 0.5), got {d}")
    for a in cfg.alphas:
        need(a > 0, "alphas", f"alpha must be positive, got {a}")
    for n in cfg.ns:
        need(n >= 1, "ns", f"sample sizes must be >= 1, got {n}")
    need(cfg.n_train >= 1, "n_train", "must be >= 1")
    need(cfg.n_test >= 1, "n_test", "must be >= 1")
    need(cfg.repeats >= 1, "repeats", "must be >= 1")
    need(0 <= cfg.seed < 2 ** 64, "seed", "must be an unsigned 64-bit integer")
    need(cfg.model in ("rff", "linear"), "model", f"must be 'rff' or 'linear', got {cfg.model!r}")
    need(cfg.num_features >= 1, "num_features", "must be >= 1")
    need(cfg.bandwidth > 0, "bandwidth", "must be positive")
    need(cfg.lam >= 0, "lam", "must be non-negative")
    need(cfg.step_size is None or cfg.step_size > 0, "step_size", "must be positive")
    need(cfg.step_scale > 0, "step_scale", "must be positive")
    need(cfg.max_epochs >= 1, "max_epochs", "must be >= 1")
    need(cfg.stop_grad_norm >= 0, "stop_grad_norm", "must be non-negative")
    need(cfg.eval_every >= 1, "eval_every", "must be >= 1")
    need(cfg.num_classes >= 2, "num_classes", "must be >= 2")
    need(cfg.min_fit_points >= 2, "min_fit_points", "must be >= 2")
    need(cfg.experiment != "soft-margin" or len(cfg.losses) == 1, "losses",
         "soft-margin trains a single loss")
    need(cfg.risk in ("exact", "monte-carlo"), "risk", f"must be 'exact' or 'monte-carlo', got {cfg.risk!r}")
    need(not (cfg.risk == "exact" and cfg.experiment == "soft-margin" and cfg.model != "linear"),
         "risk", "exact risk needs model=linear")


def to_text(cfg):
    """Serialise back to the key=value format (round-trips through :func:`parse_config_text`)."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif v is None:
            v = "auto"
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"
