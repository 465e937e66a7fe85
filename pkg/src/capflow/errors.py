"""Exception hierarchy.

Every error carries the process exit code the command line maps it to:
1 for bad input or failed validation, 2 for numerical blow-up or a curvature
cone violation, 3 for a violated mathematical property.
"""

from __future__ import annotations


class CapflowError(Exception):
    exit_code = 1


class DomainError(CapflowError, ValueError):
    """Argument outside the admissible parameter range."""


class GeometryError(CapflowError):
    """Construction produced an impossible configuration."""


class DegenerateCurveError(GeometryError):
    """Two consecutive profile nodes coincide."""


class ConstraintError(CapflowError):
    """Contact-angle repair did not converge."""


class PreconditionError(CapflowError):
    """Input violates an operation's precondition (e.g. convexity)."""


class ExtrapolationError(CapflowError):
    """Query lies outside a tabulated range."""


class ConeViolationError(CapflowError):
    """Curvature spectrum left the Garding cone; the quotient is undefined."""

    exit_code = 2

    def __init__(self, message: str, index: int | None = None, node: int | None = None):
        super().__init__(message)
        self.index = index
        self.node = node


class FlowBlowUpError(CapflowError):
    exit_code = 2


class MonotonicityError(CapflowError):
    """A quantity required to be strictly monotone is not."""

    exit_code = 3
