"""Exception hierarchy shared by all gdpbench modules.

Exit-code mapping used by the CLI: ConfigError and UsageError map to exit
code 2, every other GdpbenchError to exit code 1.
"""


class GdpbenchError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(GdpbenchError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(GdpbenchError):
    """File columns or declared schema are inconsistent."""


class ValidationError(GdpbenchError):
    """Data violates an invariant (duplicates, non-finite values, ...)."""


class ShapeError(GdpbenchError):
    """Tensor shapes are inconsistent; names the graph node involved."""


class ConfigError(GdpbenchError):
    """An experiment configuration is invalid or internally inconsistent."""


class DivergenceError(GdpbenchError):
    """Training loss became non-finite.

    ``last_finite_epoch`` is the last epoch index whose loss was finite,
    or -1 when the very first epoch diverged.
    """

    def __init__(self, message, last_finite_epoch):
        super().__init__(message)
        self.last_finite_epoch = last_finite_epoch
