"""Exception hierarchy shared across the toolkit."""


class SieError(Exception):
    """Base class for all toolkit errors."""


class InvalidInterval(SieError, ValueError):
    """Raised when ``a >= b`` or an endpoint is not finite."""


class InvalidSteps(SieError, ValueError):
    """Raised when a grid is requested with fewer than one step."""


class ShapeMismatch(SieError, ValueError):
    """Raised when a process and an ensemble do not share grid and path count."""


class NumericFailure(SieError, ArithmeticError):
    """A NaN or infinity appeared in a process.

    ``path`` and ``index`` locate the first offending entry in row-major order.
    """

    def __init__(self, path, index, message=None):
        self.path = int(path)
        self.index = int(index)
        if message is None:
            message = f"non-finite value at path {self.path}, grid index {self.index}"
        super().__init__(message)


class DescriptorError(SieError, ValueError):
    """A textual coefficient, kernel or law descriptor could not be parsed."""


class BoundUnavailable(SieError):
    """An analytic bound needed by a computation has no closed form."""


class ConfigError(SieError, ValueError):
    """Experiment configuration is malformed or names an unknown key."""
