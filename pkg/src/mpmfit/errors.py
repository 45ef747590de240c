"""Exception hierarchy.

Data problems (bad files, degenerate samples) derive from :class:`DataError`;
numerical breakdowns (non-convergence, singular systems) derive from
:class:`NumericalError`. The CLI maps the two families to distinct exit codes.
"""

from __future__ import annotations


class MpmError(Exception):
    """Base class for all errors raised by mpmfit."""


class DataError(MpmError):
    """Input data cannot be used as given."""


class NumericalError(MpmError):
    """A numerical procedure failed."""


class GridError(DataError):
    """Invalid or non-uniform frequency grid."""


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)


class ChecksumError(DataError):
    pass


class DegenerateSampleError(DataError):
    """A sample that must be nonzero (or non-constant) is not."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message)


class DomainError(DataError):
    """Samples fall outside the support of a distribution family."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, last_iterate=None, iterations: int | None = None):
        self.last_iterate = last_iterate
        self.iterations = iterations
        super().__init__(message)


class SolverError(NumericalError):
    def __init__(self, message: str, condition: float | None = None, rank: int | None = None):
        self.condition = condition
        self.rank = rank
        super().__init__(message)


class GenerationError(NumericalError):
    pass
