class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class InputError(Exception):
    """Unreadable or malformed input trace (CLI exit code 3)."""


class InvariantViolation(AssertionError):
    """An internal data-structure invariant failed (CLI exit code 4)."""
