"""Exception types raised by the simulation toolkit."""


class SfpeError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SfpeError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConfigError(SfpeError, ValueError):
    """A configuration document or serialized spec could not be parsed."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class BudgetExceededError(SfpeError, RuntimeError):
    """A sampler needed more work than its configured budget allows.

    ``nodes`` is the partial count reached when the guard tripped and
    ``index`` the draw (or element) that tripped it, when known.
    """

    def __init__(self, message, nodes=None, index=None):
        super().__init__(message)
        self.nodes = nodes
        self.index = index


class NumericOverflowError(SfpeError, FloatingPointError):
    """A map evaluation produced a non-finite value."""

    def __init__(self, message, level=None, index=None):
        if level is not None or index is not None:
            message = f"{message} (level={level}, index={index})"
        super().__init__(message)
        self.level = level
        self.index = index
