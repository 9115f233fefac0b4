class InfeasibleError(ValueError):
    """Raised when a generator cannot produce samples for the requested parameters."""


class InsufficientDataError(ValueError):
    """Raised when a rate fit has fewer usable points than it needs."""


class DivergedError(RuntimeError):
    """Raised when gradient descent blows up."""

    def __init__(self, epoch, risk):
        self.epoch = epoch
        self.risk = risk
        super().__init__(f"training diverged at epoch {epoch} (risk={risk:.3e})")


class ConfigError(ValueError):
    """Raised for invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
