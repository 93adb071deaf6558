"""Exception types raised by the toolkit."""


class NumericalFailure(ArithmeticError):
    """A computation cannot produce a meaningful result (zero energy, all-singular systems)."""


class GridTooLarge(MemoryError):
    """Requested grid exceeds the configured cell budget."""


class UnsupportedFormat(ValueError):
    """Input file encoding is not one of the supported formats."""
