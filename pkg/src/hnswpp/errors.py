"""Exception hierarchy shared across the package.

InputError covers anything a caller did wrong (bad arguments, malformed
files, missing prerequisites) and maps to CLI exit code 2.
InvariantViolation means a built structure failed its own consistency
checks and maps to exit code 3.
"""


class HnswError(Exception):
    """Base class for all package errors."""


class InputError(HnswError, ValueError):
    """Invalid caller input: bad arguments, missing data, malformed files."""


class ConfigError(InputError):
    """An index configuration field is out of its allowed range."""


class FormatError(InputError):
    """A file could not be parsed; the message names the byte offset or line."""


class EmptyIndexError(InputError):
    """A query was issued against an index with no inserted nodes."""


class ExcludeSetExhausted(HnswError):
    """Entry-point replacement probed an entire layer without leaving the exclude set."""


class InvariantViolation(HnswError):
    """A structural invariant of a built index does not hold."""
