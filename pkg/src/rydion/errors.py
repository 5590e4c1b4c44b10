"""Exception hierarchy shared by the library and the command line."""


class RydionError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConfigError(RydionError):
    exit_code = 2


class DomainError(RydionError, ValueError):
    """Physically meaningless input or a result outside the requested range."""

    exit_code = 3


class ConvergenceError(RydionError):
    """A numerical stage could not reach its stated accuracy."""

    exit_code = 4
