"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Argument violates a documented precondition (non-finite, out of range, ...)."""


class ShapeError(ValueError):
    """Array dimensions do not chain."""


class UnsupportedOperationError(ValueError):
    """Operation is not defined for this kind of network."""


class NoBudgetError(ValueError):
    """Too few rows to certify any outlier count."""
