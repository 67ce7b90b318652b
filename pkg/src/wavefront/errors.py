"""Exception hierarchy shared across the package."""

from __future__ import annotations


class WavefrontError(Exception):
    """Base class for all package errors."""


class DomainError(WavefrontError, ValueError):
    """An argument lies outside the set on which an operation is defined."""


class RangeError(WavefrontError, ArithmeticError):
    """A computed quantity overflowed or no bracket could be found."""


class EvaluationError(WavefrontError, ValueError):
    """A user-supplied function returned non-finite values."""


class PreconditionError(WavefrontError, ValueError):
    """A documented precondition of an operation does not hold."""


class ConstructionError(WavefrontError, ValueError):
    """An explicit minorant could not be built on the sample set.

    ``s`` and ``u`` locate the violating sample when one is known.
    """

    def __init__(self, message: str, s: float | None = None, u: float | None = None):
        super().__init__(message)
        self.s = s
        self.u = u


class SimulationError(WavefrontError, RuntimeError):
    """The time stepper produced a non-finite or exploding state."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t={t!r})")
        self.t = t


class SolverError(WavefrontError, RuntimeError):
    """An iterative or shooting solver failed to bracket a solution."""
