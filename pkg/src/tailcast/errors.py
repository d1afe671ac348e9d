"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, NumericalError -> 1.
"""


class InputError(ValueError):
    """Invalid user-supplied data or configuration."""


class NumericalError(RuntimeError):
    """A computation produced non-finite or otherwise unusable values."""


class ParameterError(InputError):
    """Model or distribution parameters outside their admissible region."""
