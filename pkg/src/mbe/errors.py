"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration: unknown keys, malformed specs, bad pairings."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its contract."""
