"""Exception types shared by all modules."""


class InvalidInputError(ValueError):
    """Arguments violate a documented precondition."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``residual`` carries the last error estimate when one is available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedSizeError(InvalidInputError):
    """Problem too large for a dense computation."""


class ConfigError(InvalidInputError):
    """Malformed or inconsistent run configuration."""

    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(key)
        prefix = f"{': '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key
