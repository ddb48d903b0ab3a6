"""Exception hierarchy shared by all solver modules.

Every error carries a stable ``kind`` string (the class name) and an optional
``details`` dict so the CLI can serialize failures without guessing.
"""

from __future__ import annotations


class UltrafixError(Exception):
    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    @property
    def kind(self) -> str:
        return type(self).__name__


class SchemaError(UltrafixError):
    """Malformed request or JSON payload."""


class DivisionByZero(UltrafixError):
    """Division by an exactly-zero field element."""


class PrecisionExhausted(UltrafixError):
    """An operation needed digits that the tracked precision no longer has."""


class SingularMatrix(UltrafixError):
    """No nonzero pivot at tracked precision."""


class NotAContraction(UltrafixError):
    """Operator norm at least 1 where a norm < 1 was required."""


class DimensionMismatch(UltrafixError):
    pass


class DomainViolation(UltrafixError):
    """Point or ball outside the map's declared domain."""


class NotAdmissible(UltrafixError):
    """The iteration is not guaranteed to stay inside its domain ball."""


class DomainEscape(UltrafixError):
    """An iterate left the domain ball or violated its step bound."""


class NotAFixedPoint(UltrafixError):
    pass


class SingularA(UltrafixError):
    """The anchor operator of a certificate is not invertible."""


class NotCertifiable(UltrafixError):
    """Strictness modulus too large for the anchor operator."""

    def __init__(self, sigma, threshold):
        super().__init__(
            f"strictness bound {sigma} is not below 1/|A^-1| = {threshold}",
            sigma=str(sigma),
            threshold=str(threshold),
        )
        self.sigma = sigma
        self.threshold = threshold


class TargetOutsideGuarantee(UltrafixError):
    """Requested target lies outside the certified image."""


class OutsideWindow(UltrafixError):
    """Parameter or target outside a certified window."""


class WindowNotFound(UltrafixError):
    """Radius search exhausted without certifying a window."""
