"""Exception types shared by the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class RangeError(ArithmeticError):
    """A requested evaluation would overflow double precision."""


class WindowError(ValueError):
    """A scaling window is inadmissible for the data it is applied to."""

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class BracketError(RuntimeError):
    """A root bracket does not enclose a sign change."""


class ConfigError(ValueError):
    """A configuration file is missing, unreadable or inconsistent."""
