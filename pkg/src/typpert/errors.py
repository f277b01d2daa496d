"""Exception types shared across the package."""


class TyppertError(Exception):
    """Base class for all package errors."""


class ModelSizeError(TyppertError, ValueError):
    """Requested system size cannot host the required terms or sites."""


class EmptySectorError(TyppertError, ValueError):
    """The requested magnetization sector contains no states."""


class SpecificationError(TyppertError, ValueError):
    """Invalid or inconsistent run/state specification."""


class CapacityError(TyppertError, RuntimeError):
    """Dimension exceeds what the requested method can handle."""


class WindowError(TyppertError, ValueError):
    """Energy window is empty or too small for the operation."""


class BoundsError(TyppertError, RuntimeError):
    """Spectral bound estimation failed."""


class PropagationError(TyppertError, RuntimeError):
    """Krylov propagation did not reach the target accuracy."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GridMismatchError(TyppertError, ValueError):
    """Two time series do not share the same time grid."""


class NormalizationError(TyppertError, ValueError):
    """Series cannot be normalized (zero initial value or trace)."""


class NoRelaxationError(TyppertError, RuntimeError):
    """Series never settles below the relaxation threshold; extend the horizon."""


class FitError(TyppertError, RuntimeError):
    """Least-squares fit failed or is degenerate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(TyppertError, ValueError):
    """Run configuration file is invalid."""
