"""Exception hierarchy for the associated Lamé / SUSY toolkit.

Every error derives from :class:`LameSusyError` and from the built-in
exception a caller would naturally catch (``ValueError`` for bad input,
``ArithmeticError`` for numerical breakdowns), so library users can stay
generic while the CLI maps each class to a dedicated exit code.
"""

from __future__ import annotations

from typing import Optional


class LameSusyError(Exception):
    """Base class for all errors raised by :mod:`core`."""


class DomainError(LameSusyError, ValueError):
    """An input lies outside the supported parameter domain."""


class UnsupportedModelError(LameSusyError, ValueError):
    """The (m, ell) pair is not one of the supported models."""


class PoleProximityError(LameSusyError, ArithmeticError):
    """An argument falls within the guard radius of a pole."""

    def __init__(self, message: str, distance: float) -> None:
        super().__init__(message)
        self.distance = distance


class ConvergenceError(LameSusyError, ArithmeticError):
    """An iterative solver did not reach its tolerance."""


class NormalizationError(LameSusyError, ArithmeticError):
    """A Bloch function vanishes at every tried reference point."""


class SingularTransformationError(LameSusyError, ArithmeticError):
    """The SUSY seed has a node, so the partner potential is singular."""

    def __init__(self, message: str, node: Optional[float] = None) -> None:
        super().__init__(message)
        self.node = node


class NonNormalizableError(LameSusyError, ArithmeticError):
    """The defect bound state shows no tail decay in the scanned range."""


class IntegratorError(LameSusyError, RuntimeError):
    """The monodromy integrator failed (step-size underflow, NaN, ...)."""
