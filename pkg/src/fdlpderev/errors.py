"""Exception types shared across the package.

The CLI maps each family onto a distinct exit code, see ``fdlpderev.cli``.
"""


class InvalidArgumentError(ValueError):
    pass


class NumericalDegeneracyError(ArithmeticError):
    """Linear-prediction recursion hit a non-positive prediction error."""

    def __init__(self, message, order=None, band=None):
        super().__init__(message)
        self.order = order
        self.band = band


class NumericOverflowError(ArithmeticError):
    """A network activation became non-finite."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class ContractViolationError(RuntimeError):
    pass


class UnsupportedFormatError(IOError):
    pass


class RateMismatchError(ValueError):
    pass
