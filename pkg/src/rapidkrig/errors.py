"""Exception hierarchy shared by all rapidkrig modules."""


class RapidKrigError(Exception):
    """Base class for all rapidkrig errors."""


class DomainError(RapidKrigError):
    """Invalid input: bad parameter values, shapes, or out-of-range data."""


class NumericError(RapidKrigError):
    """A numerical procedure failed (factorization, root finding, embedding)."""


class InternalError(RapidKrigError):
    """An internal contract was violated; indicates a bug, not a user error."""
