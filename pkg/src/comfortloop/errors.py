"""Exception types shared across the package."""


class ComfortLoopError(Exception):
    """Base class for all package errors."""


class NonConvergence(ComfortLoopError):
    """The clothing-surface-temperature solve did not converge."""

    def __init__(self, message: str, last_estimate: float, iterations: int):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.iterations = iterations


class InvalidCount(ComfortLoopError, ValueError):
    pass


class DegenerateRange(ComfortLoopError, ValueError):
    pass


class DivergedTraining(ComfortLoopError):
    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class UndefinedR2(ComfortLoopError, ValueError):
    pass


class MissingModel(ComfortLoopError, ValueError):
    pass


class ParseError(ComfortLoopError, ValueError):
    """Malformed weight, stats, dataset or config file.

    ``line`` is 1-based; ``field`` names the offending key when known.
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field
