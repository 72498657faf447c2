"""Exception types shared across the package."""

from __future__ import annotations


class ParseError(ValueError):
    """Malformed point-cloud input (bad field, inconsistent arity, empty stream)."""


class OutOfSupportError(ValueError):
    """A point falls outside the grid support or in a cell the model knows nothing about.

    ``indices`` lists the offending point positions when the error comes from
    a batch operation.
    """

    def __init__(self, message: str, indices: list[int] | None = None):
        super().__init__(message)
        self.indices = indices or []


class InfeasibleError(RuntimeError):
    """A restricted transportation problem admits no feasible flow."""


class InternalError(RuntimeError):
    """An invariant the solver relies on was violated; indicates a bug."""
