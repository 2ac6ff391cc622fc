"""Root of the domain error hierarchy."""

from __future__ import annotations


class EotError(ValueError):
    """Base class for all invalid-input and numerical-contract errors."""


class NotConverged(EotError):
    """Raised on request when an iterative solver hit its iteration cap."""
