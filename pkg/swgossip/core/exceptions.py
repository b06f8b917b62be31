"""
Exception hierarchy for swgossip.

Every error raised by the package derives from ``GossipError`` and carries an
optional ``details`` dictionary that the CLI prints and the logs record.
"""

from typing import Any, Dict, Optional


class GossipError(Exception):
    """Root exception of the package."""

    def __init__(self, message: str = "", details: Optional[Dict[str, Any]] = None):
        """
        Args:
            message: Human readable message
            details: Structured context (offending values, limits, names)
        """
        super().__init__(message)
        self.details = details or {}


class ConfigurationError(GossipError):
    """Config file unreadable, malformed or failing its schema."""

    pass


class ValidationError(GossipError):
    """Rejected input."""

    pass


class AssumptionError(ValidationError):
    """A required assumption (A1, A2 or B) does not hold for a family."""

    def __init__(self, assumption: str, message: str = "", details: Optional[Dict[str, Any]] = None):
        super().__init__(message or f"assumption {assumption} does not hold", details)
        self.assumption = assumption


class SizeCapError(ValidationError):
    """Dense computation would exceed a configured size cap."""

    pass


class SlopeError(ValidationError):
    """Regression window contains non-positive MSE values."""

    pass


class DegenerateFamilyError(GossipError):
    """The eigenvalue 1 of E[K⊗K] is not simple."""

    pass


class InvariantViolationError(GossipError):
    """A monitored run broke mass conservation or the ∞-norm contraction."""

    pass


class StorageError(GossipError):
    """File read or write failed."""

    pass
