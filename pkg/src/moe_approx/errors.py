"""Exception types shared across the package.

Everything user-facing raises one of these so callers can distinguish
bad inputs (ValueError family) from failed numerical procedures
(RuntimeError family).
"""

from __future__ import annotations


class DimensionError(ValueError):
    """An array argument has the wrong shape for the requested operation."""


class NetworkSpecError(ValueError):
    """A network or piecewise-linear description violates its structural rules."""


class AccountingError(ValueError):
    """Parameter accounting is ill-defined (e.g. experts of unequal size)."""


class DomainError(ValueError):
    """A point lies outside the domain a target or chart is defined on."""


class TargetValidationError(ValueError):
    """A piecewise target is inconsistent; carries a witness point.

    Attributes
    ----------
    witness : tuple | None
        (point, region_a, region_b, discrepancy) for the worst offending
        sample, when available.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class CertificationError(RuntimeError):
    """A routing certification loop exhausted its width budget.

    Attributes
    ----------
    best_tol : float
        Best sup-norm tolerance achieved before giving up.
    best_width : int
        Width at which ``best_tol`` was achieved.
    """

    def __init__(self, message: str, best_tol: float, best_width: int):
        super().__init__(message)
        self.best_tol = float(best_tol)
        self.best_width = int(best_width)


class FitError(RuntimeError):
    """A least-squares or interpolation fit could not be completed."""


class RateFitError(RuntimeError):
    """A convergence-rate fit was requested on unusable data."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


class ParseError(ConfigError):
    """A config or artifact file could not be parsed."""
