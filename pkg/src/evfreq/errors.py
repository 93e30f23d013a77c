"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so keep the split between
configuration, data, and I/O problems intact when raising.
"""


class EvfreqError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EvfreqError):
    """Invalid parameter value or malformed scenario/config input."""


class FormatError(EvfreqError):
    """Malformed file header or unrecognized container format."""


class DataError(EvfreqError):
    """A record violates an invariant (bounds, polarity, ...)."""

    def __init__(self, msg, index=None):
        super().__init__(msg if index is None else f"{msg} (record {index})")
        self.index = index


class OrderingError(DataError):
    """Timestamps regressed within a stream or pixel."""
