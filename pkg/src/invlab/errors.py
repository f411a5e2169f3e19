"""Exception types shared across the package."""


class DataError(ValueError):
    """Input data is missing, malformed, or lacks a required column."""


class NumericError(ArithmeticError):
    """A numerical routine could not produce a finite result."""
