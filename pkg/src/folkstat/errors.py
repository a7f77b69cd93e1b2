"""Exception hierarchy.

The CLI maps :class:`DataError` to exit code 2 and :class:`NumericError`
to exit code 3, so every module raises a subclass of one of the two.
"""


class FolkstatError(Exception):
    """Base class for all package errors."""


class DataError(FolkstatError):
    """Input data is malformed, inconsistent or insufficient."""


class NumericError(FolkstatError):
    """A numerical procedure could not produce a result."""
