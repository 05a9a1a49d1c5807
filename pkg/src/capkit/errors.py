"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
InvariantError -> 4.
"""


class CapkitError(Exception):
    pass


class ConfigError(CapkitError):
    """A configuration value violates a module precondition."""


class DataError(CapkitError):
    """An input file or record is malformed or inconsistent."""


class InvariantError(CapkitError):
    """An internal consistency check failed; indicates a bug."""
