"""Shared exception types."""


class DomainError(ValueError):
    """An input violates an operation's contract (range, shape, variant, ...)."""


class DatasetIOError(IOError):
    """Dataset storage is missing or corrupt; the message names the offending file."""


class TrainingError(RuntimeError):
    """Training produced an unusable state (non-finite loss, bad step)."""
