"""Exception types raised across the package."""


class NPRGError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(NPRGError, ValueError):
    """A physical or numerical parameter is outside its allowed range.

    ``field`` names the offending parameter so callers (notably the CLI)
    can report it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InvalidGridError(InvalidParameterError):
    pass


class SpinodalReached(NPRGError):
    """The flow's logarithm argument dropped to the spinodal floor."""

    def __init__(self, log_argument, q=None, scale=None):
        self.log_argument = float(log_argument)
        self.q = q
        self.scale = scale
        where = ""
        if q is not None and scale is not None:
            where = f" at q={q:.6g}, scale={scale:.6g}"
        super().__init__(f"spinodal reached (log argument {self.log_argument:.3e}){where}")


class NotConvergedError(NPRGError):
    pass


class InvalidObservablesError(NPRGError):
    pass


class OracleError(NPRGError):
    """Raised by the exact-diagonalization oracle."""


class BoxTooSmallError(OracleError):
    pass


class UnstableDifferenceError(OracleError):
    pass


class FitError(NPRGError):
    pass


class InsufficientDataError(FitError):
    pass


class DegenerateFitError(FitError):
    pass


class ConfigError(NPRGError):
    """Configuration could not be parsed or validated."""
