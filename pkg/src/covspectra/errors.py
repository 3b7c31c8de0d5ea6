"""Exception types shared across the package."""


class SpectraError(Exception):
    """Base class for numeric failures in covspectra."""


class PoleError(SpectraError):
    """An evaluation point coincides with a pole of the value map."""


class ConvergenceError(SpectraError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class RootSearchError(SpectraError):
    """Root isolation failed on a sub-interval of the real value map."""


class NoGapError(SpectraError):
    """The computed support has no interior gap to test."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""
