"""Exception types shared across the package."""


class DelayAdmError(Exception):
    """Base class for all errors raised by delayadm."""


class DimensionError(DelayAdmError):
    """Operands have incompatible or malformed dimensions."""


class RangeError(DelayAdmError):
    """A numeric argument lies outside its admissible range."""


class SingularMatrixError(DelayAdmError):
    """A linear solve hit a numerically singular operator.

    Carries the offending pivot magnitude and, for resolvent solves, the
    spectral parameter ``lam`` at which singularity occurred.
    """

    def __init__(self, msg, pivot=None, lam=None):
        super().__init__(msg)
        self.pivot = pivot
        self.lam = lam


class ConvergenceError(DelayAdmError):
    """An iteration failed to converge; ``defect`` holds the last residual."""

    def __init__(self, msg, defect=None):
        super().__init__(msg)
        self.defect = defect


class ConfigError(DelayAdmError):
    """Invalid configuration (grid incompatibility, CFL violation, ...)."""


class DomainError(DelayAdmError):
    """An argument violates a mathematical domain condition."""
