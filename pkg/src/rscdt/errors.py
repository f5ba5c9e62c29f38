"""Exception types shared across the package.

The CLI maps these onto stable exit codes: invalid input 1, data errors 2,
numerical failures 3.
"""


class InvalidInputError(ValueError):
    """A precondition on user-supplied values was violated."""


class DataFormatError(Exception):
    """A file could not be read, or its header disagrees with its payload."""


class ConfigMismatchError(Exception):
    """Two components were combined with incompatible configurations."""


class SingularTransportError(ArithmeticError):
    """A transport map degenerated (constant quantile, zero mass, ...)."""


class PlacementError(RuntimeError):
    """Synthetic shape placement failed within the retry budget."""
