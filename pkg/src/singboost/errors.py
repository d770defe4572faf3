"""Exception hierarchy shared by all modules."""


class SingBoostError(Exception):
    """Base class. ``category`` is the stable prefix used by the CLI."""

    category = "error"


class DataError(SingBoostError, ValueError):
    category = "data"


class LossError(SingBoostError, ValueError):
    category = "loss"


class ConfigError(SingBoostError, ValueError):
    category = "config"


class DesignError(SingBoostError, ValueError):
    """Raised when a design matrix is not of full rank."""

    category = "design"


class MeasureError(SingBoostError, ValueError):
    category = "measure"
