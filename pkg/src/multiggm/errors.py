"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so keep the split between
configuration, data, and numerical failures intact.
"""


class MultiGGMError(Exception):
    """Base class for all package errors."""


class ConfigError(MultiGGMError):
    """Invalid or inconsistent user configuration (CLI exit code 1)."""


class DataFormatError(MultiGGMError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class DimensionMismatchError(DataFormatError):
    """Array shapes do not line up across populations or operations."""


class NotPositiveDefiniteError(MultiGGMError):
    """A matrix required to be positive definite failed its Cholesky check."""


class ConvergenceError(MultiGGMError):
    """An iterative solve did not reach its tolerance (CLI exit code 3)."""
