"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ParseError -> 2, PreconditionError -> 3,
NumericBudgetError -> 4.
"""

from __future__ import annotations


class TatePeriodsError(Exception):
    """Base class for all package errors."""


class ParseError(TatePeriodsError):
    """Malformed input text (graph files, path files, period strings)."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class PreconditionError(TatePeriodsError):
    """An operation was called outside its stated domain."""


class UnboundSymbolError(PreconditionError):
    """Numeric evaluation hit a symbol with no binding."""


class NumericBudgetError(TatePeriodsError):
    """Requested accuracy is not certifiable within the given truncation or budget."""
