class ForecastCFError(Exception):
    """Base class for all package errors."""


class ConfigError(ForecastCFError):
    """Invalid or inconsistent configuration (CLI exit code 1)."""


class DataError(ForecastCFError):
    """Unreadable, malformed or insufficient data (CLI exit code 2)."""


class NonFiniteError(ForecastCFError):
    """A NaN or infinity appeared during a counterfactual search."""
