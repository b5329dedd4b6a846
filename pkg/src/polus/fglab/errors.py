"""Exceptions raised by fglab computations.

Every failure names the module and operation it comes from, and carries a
witness (a monomial, a coefficient, an index) when one exists. The command
line maps each family to an exit status.
"""
from typing import Any


class FglabError(Exception):
    """Base class for fglab failures."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        module: str = "",
        operation: str = "",
        witness: Any = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.module = module
        self.operation = operation
        self.witness = witness

    def __str__(self) -> str:
        where = ".".join(part for part in (self.module, self.operation) if part)
        text = f"[{where}] {self.message}" if where else self.message
        if self.witness is not None:
            text += f" (witness: {self.witness})"
        return text


class InputError(FglabError, ValueError):
    """Raised on malformed input: bad primes, non-unit coefficients, bad JSON."""

    exit_code = 1


class ConstantUnavailableError(InputError):
    """Raised when no leading constant is known for an (operation, codim) pair."""


class ClaimMismatchError(FglabError):
    """Raised when a computation succeeds but contradicts a stated property."""

    exit_code = 2


class InternalConsistencyError(ClaimMismatchError):
    """Raised when two equivalent criteria disagree."""


class CapInsufficientError(FglabError):
    """Raised when caps are too small to decide, or storage is exhausted."""

    exit_code = 3


class SeriesError(FglabError):
    """Raised on invalid series manipulations (mixed variables, bad substitutions)."""

    exit_code = 1


class SolverError(FglabError):
    """Raised when the integrality solver exhausts its search."""

    exit_code = 2
