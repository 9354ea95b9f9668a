"""Exception hierarchy shared by all modules."""


class RdeError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(RdeError, ValueError):
    """A caller violated an operation precondition."""


class ResourceLimitError(RdeError, RuntimeError):
    """An enumeration or search exceeded its configured budget."""

    def __init__(self, message: str, budget=None):
        super().__init__(message)
        self.budget = budget


class AmbiguityError(RdeError, RuntimeError):
    """Near-ties at a numeric tolerance prevent a well-defined answer."""


class InternalConsistencyError(RdeError, RuntimeError):
    """An invariant that should be unbreakable was broken; signals a bug."""
