"""Error types shared across the package."""


class ArborError(Exception):
    """Base error; the message starts with a short upper-case code when one applies."""


class InputError(ArborError):
    """Malformed instance file or inconsistent instance data."""


class UnreachableError(ArborError):
    """A required vertex cannot be reached from the root."""

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class BudgetTooSmall(ArborError):
    """A covering pass stalled at the current budget guess."""


class TooLarge(ArborError):
    """Exact enumeration refused: instance above the configured caps or time ran out."""
