"""Exception types shared across the package.

Every error raised on purpose by this package derives from BigcsError, so
callers (and the command line driver) can map failures to exit codes without
string matching.
"""


class BigcsError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(BigcsError):
    """An array or operator dimension does not match what was promised."""


class DomainError(BigcsError):
    """A parameter lies outside its valid domain (rates, weights, levels)."""


class FormatError(BigcsError):
    """A file on disk is not a valid bundle or image in a supported format."""


class DivergenceError(BigcsError):
    """The iteration produced non-finite values and cannot continue."""
