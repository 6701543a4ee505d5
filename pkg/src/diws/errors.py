"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration/usage/parse problems
exit 1, numerical failures exit 2.
"""


class DiwsError(Exception):
    """Base class for all package errors."""


class ConfigError(DiwsError):
    """Invalid configuration detected before any computation."""


class ParseError(ConfigError):
    """Malformed input text (CSV rows, architecture strings, config files)."""


class UsageError(DiwsError):
    """An operation was called in violation of its contract."""


class NumericalError(DiwsError):
    """A numerical operation failed loudly (ill-conditioning, non-finite values)."""
