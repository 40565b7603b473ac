"""Shared exception base so callers can catch everything from one place."""


class RuleforgeError(Exception):
    """Base class for all errors raised by this package."""
