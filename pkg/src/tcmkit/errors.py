"""Exception taxonomy.

Every library error carries a stable ``category`` string. The CLI prints it
verbatim so scripts can branch on the failure kind.
"""

from __future__ import annotations


class TcmError(Exception):
    """Base class for all tcmkit errors."""

    category = "TcmError"


class ValidationError(TcmError, ValueError):
    """Invalid model, distribution or configuration input."""

    category = "validation"


class PreconditionViolation(TcmError, ValueError):
    category = "PreconditionViolation"


class DegenerateModuli(TcmError, ValueError):
    """Some decay factor has unit modulus where strict decay is required."""

    category = "DegenerateModuli"


class DegenerateRoots(TcmError, ArithmeticError):
    category = "DegenerateRoots"


class PoleHit(TcmError, ZeroDivisionError):
    """Evaluation point sits (numerically) on a pole."""

    category = "PoleHit"


class PoleTooClose(TcmError, ValueError):
    """A pole lies within the guard distance of a quadrature contour."""

    category = "PoleTooClose"


class MuZero(TcmError, ZeroDivisionError):
    category = "MuZero"


class LeadingZero(TcmError, ArithmeticError):
    category = "LeadingZero"


class RetryExhausted(TcmError, RuntimeError):
    category = "RetryExhausted"


class NotConverged(TcmError, ArithmeticError):
    category = "NotConverged"
