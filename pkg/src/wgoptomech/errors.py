"""Exception hierarchy shared by the solvers and the CLI."""


class WgOptomechError(Exception):
    """Base class for all package errors."""


class ConfigError(WgOptomechError, ValueError):
    """Invalid parameters or run configuration."""


class GridTooCoarse(ConfigError):
    """Grid spacing does not resolve the coupling oscillation."""


class DomainTooSmall(ConfigError):
    """The soft harmonic wall does not contain the requested spectral window."""


class ConvergenceFailure(WgOptomechError, RuntimeError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DecouplingViolation(WgOptomechError):
    def __init__(self, message, max_deviation):
        super().__init__(message)
        self.max_deviation = max_deviation


class NoClassicalRegion(WgOptomechError, ValueError):
    """Energy lies below the global minimum of the Hermitian potential."""


class BelowThreshold(WgOptomechError, ValueError):
    """Coupling is below the appearance threshold of the requested minima set."""


class UnpairedComplexEigenvalue(WgOptomechError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class InsufficientTrack(WgOptomechError):
    """A localized pair was found at too few sweep points to fit."""
