"""Exception hierarchy shared by every subpackage."""


class AgroError(Exception):
    """Base class; ``category`` is what the CLI prints in its error line."""

    category = "error"


class ConfigError(AgroError, ValueError):
    category = "config"


class DataError(AgroError, ValueError):
    category = "data"


class ShapeError(AgroError, ValueError):
    category = "shape"


class DomainError(AgroError, ValueError):
    category = "domain"


class StateError(AgroError, RuntimeError):
    category = "state"


class UsageError(AgroError, RuntimeError):
    category = "usage"
