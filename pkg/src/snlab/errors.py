"""Semantic exception hierarchy shared by every snlab module.

The command line maps these onto process exit codes (see snlab.cli):
configuration problems exit 2, runtime instability exits 3, capacity
limits exit 4. Library users catch the types directly.
"""

from __future__ import annotations


class SnlabError(Exception):
    """Base class for every error raised deliberately by this package."""


class DomainError(SnlabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class MalformedCovarianceError(DomainError):
    """A 4x4 covariance matrix fails symmetry/positivity sanity checks."""


class ConfigError(SnlabError, ValueError):
    """A run configuration is invalid before any stepping starts.

    ``field`` holds a dotted path into the offending configuration
    mapping when one exists (e.g. ``"physical.mass_kg"``).
    """

    def __init__(self, message: str, *, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class StabilityError(SnlabError, RuntimeError):
    """Numerical instability detected while an evolution is running."""


class CapacityError(SnlabError, RuntimeError):
    """A requested problem size exceeds a documented resource ceiling."""
