"""Exception hierarchy.

Library code raises; only :func:`higherlag.cli.main` turns these into process
exit codes (``exit_code`` on each class).
"""

from __future__ import annotations

from typing import Iterable, Optional, Tuple


class HigherLagError(RuntimeError):
    """Base class for every error raised by higherlag."""

    exit_code = 1


# --------------------------------------------------------------------------- #
# Input / schema problems (exit 2)
# --------------------------------------------------------------------------- #


class SchemaError(HigherLagError, ValueError):
    """A problem file, structure or expression is not wired correctly."""

    exit_code = 2


class ExprSyntaxError(SchemaError):
    """The expression source does not parse."""

    def __init__(
        self, message: str, offset: int, expected: Iterable[str] = ()
    ) -> None:
        self.offset = offset
        self.expected: Tuple[str, ...] = tuple(sorted(set(expected)))
        detail = f"{message} at byte {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownFunctionError(ExprSyntaxError):
    """A call names a function outside sin, cos, exp, log, sqrt, tanh."""


class UnboundIdentifierError(SchemaError):
    """An identifier has no value in the evaluation binding."""

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"unbound identifier {name!r}")


# --------------------------------------------------------------------------- #
# Numeric failures (exit 3)
# --------------------------------------------------------------------------- #


class NumericError(HigherLagError, ArithmeticError):
    """A numeric evaluation failed."""

    exit_code = 3


class ContractViolation(NumericError):
    """Arguments break an operation's preconditions (orders, shapes, ranges)."""


class DomainError(NumericError):
    """A function was evaluated outside its domain."""


class NonFiniteError(NumericError):
    """A computed coefficient is not finite."""

    def __init__(self, message: str, index: Optional[int] = None) -> None:
        self.index = index
        if index is not None:
            message = f"{message} (component {index})"
        super().__init__(message)


class StepRejected(NumericError):
    """The base integrator produced a non-finite state."""


class ConsistencyError(NumericError):
    """An internal identity that must hold by construction was violated."""


class NotInRelation(NumericError):
    """Two tangent vectors are not related by the canonical relation."""

    def __init__(self, residual: float) -> None:
        self.residual = residual
        super().__init__(f"vectors are not in relation (residual {residual:.3e})")


class InapplicableFamily(NumericError):
    """A closed-form oracle family does not apply to the given structure."""


# --------------------------------------------------------------------------- #
# Identity / check failures (exit 4)
# --------------------------------------------------------------------------- #


class IdentityFailure(HigherLagError):
    """A check or verification suite did not pass."""

    exit_code = 4
