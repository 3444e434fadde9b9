"""Exception types raised by the solver pipeline."""


class SgrteError(Exception):
    """Base class for all package errors."""


class ArgumentError(SgrteError, ValueError):
    """Invalid argument (index out of range, point outside the domain, ...)."""


class DataError(SgrteError, ValueError):
    """Non-finite or otherwise unusable sampled data."""


class GeometryError(SgrteError, ValueError):
    pass


class ConfigError(SgrteError):
    """Bad run configuration; maps to CLI exit code 2."""


class AssumptionError(SgrteError):
    """The coercivity assumption sigma_t - m*sigma_s > 0 fails somewhere.

    Carries the minimum margin and where it was found.
    """

    def __init__(self, message, margin=None, location=None):
        super().__init__(message)
        self.margin = margin
        self.location = location


class SolverError(SgrteError, RuntimeError):
    """Singular block, NaN in the iterate, or a similar solver failure."""


class InternalError(SgrteError, RuntimeError):
    pass
