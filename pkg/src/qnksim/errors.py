"""Shared exception types."""


class ResourceLimitError(ValueError):
    """An exhaustive computation was requested beyond its documented bound."""
