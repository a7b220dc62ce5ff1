"""Exception hierarchy shared by all skyvis modules."""
from __future__ import annotations


class SkyvisError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SkyvisError, ValueError):
    """Model or scenario parameters violate their constraints."""


class DomainError(SkyvisError, ValueError):
    """Function argument outside the mathematical domain."""


class TruncationError(SkyvisError):
    """A certified truncation bound cannot be met within the sane cap."""


class EmptyRealizationError(SkyvisError):
    """Operation requires at least one building."""


class SampleSizeError(SkyvisError, ValueError):
    """Too few samples for the requested statistic."""


class QuadratureError(SkyvisError):
    """Adaptive quadrature failed to converge.

    Carries the best available estimate and its error bound so callers
    can decide whether to proceed anyway.
    """

    def __init__(self, message: str, best: float | None = None,
                 error_bound: float | None = None):
        super().__init__(message)
        self.best = best
        self.error_bound = error_bound
