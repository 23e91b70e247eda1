"""Exception types shared across the package."""

from __future__ import annotations

__all__ = ["ConfigError", "NumericalError"]


class ConfigError(Exception):
    """A configuration field is missing, unknown, or violates an invariant.

    Carries the dotted field path (e.g. ``"market.sigma_S"``) so callers can
    report exactly which entry failed.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class NumericalError(RuntimeError):
    """A computation left its valid domain (degenerate drift, failed quadrature)."""
