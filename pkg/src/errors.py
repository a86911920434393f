"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class GeodesicDiscrepancyError(Exception):
    """Base class for every domain error raised by the package."""


class SpaceError(GeodesicDiscrepancyError, ValueError):
    """Invalid space description, point representation or model mismatch."""


class DomainError(GeodesicDiscrepancyError, ValueError):
    """Argument outside the domain of an operation (radius, degree, index)."""


class UnsupportedSpaceError(GeodesicDiscrepancyError):
    """The space has no vector model, so no sampler or intrinsic distance."""


class PointSetError(GeodesicDiscrepancyError, ValueError):
    """Malformed point-set file or weights violating the probability invariant."""


class ConvergenceError(GeodesicDiscrepancyError):
    """A safeguarded root refinement did not reach its residual target."""


class TruncationError(GeodesicDiscrepancyError):
    """The spectral tail could not be pushed below tolerance within the degree cap."""


__all__ = [
    "GeodesicDiscrepancyError",
    "SpaceError",
    "DomainError",
    "UnsupportedSpaceError",
    "PointSetError",
    "ConvergenceError",
    "TruncationError",
]
