"""
Exception hierarchy for loopcanon.

Every error raised deliberately by the library derives from LoopCanonError,
so callers (the CLI in particular) can separate usage mistakes from failed
checks and from genuine bugs.
"""

from typing import Any, Dict, Optional


class LoopCanonError(Exception):
    """Base exception for loopcanon errors."""

    pass


class ArgumentError(LoopCanonError):
    """Raised when an operation receives an argument outside its domain."""

    pass


class ConfigError(LoopCanonError):
    """Raised when configuration values are missing or malformed."""

    pass


class BoundsExceededError(LoopCanonError):
    """Raised when an enumeration would leave the supported desk bounds."""

    pass


class InterpolationError(LoopCanonError):
    """Raised when finite-field counts do not fit a polynomial in q."""

    pass


class NonClearingDivisionError(LoopCanonError):
    """Raised when an exact division leaves a remainder."""

    pass


class UnboundedError(LoopCanonError):
    """Raised when a coefficient cannot be certified to be a finite sum."""

    pass


class UnsupportedDiagramError(LoopCanonError):
    """Raised for root tests on star diagrams that are not of finite type."""

    pass


class NotNilpotentError(LoopCanonError):
    """Raised when a quiver representation is not nilpotent."""

    pass


class NotInjectiveError(LoopCanonError):
    """Raised when a sheaf map expected to be injective is not."""

    pass


class WindowClosureError(LoopCanonError):
    """Raised when a product is requested outside a closed window."""

    pass


class CheckFailedError(LoopCanonError):
    """Raised when a verification check finds a counterexample."""

    def __init__(self, message: str, counterexample: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.counterexample = counterexample or {}
