"""Exception types raised across the package."""

from __future__ import annotations


class EigsolveError(Exception):
    """Base class for every error raised by eigsolve."""


class NonHermitianInput(EigsolveError, ValueError):
    pass


class DimensionMismatch(EigsolveError, ValueError):
    pass


class IndexOutOfRange(EigsolveError, IndexError):
    pass


class EqualIndices(EigsolveError, ValueError):
    pass


class InvalidEpsilon(EigsolveError, ValueError):
    pass


class GapDegenerate(EigsolveError, ValueError):
    """The two eigenvalues coincide, so P0 carries no fidelity information."""


class RadicandNegative(EigsolveError, ValueError):
    pass


class EmptyBatch(EigsolveError, ValueError):
    pass


class InsufficientShots(EigsolveError, ValueError):
    pass


class ParamLengthMismatch(EigsolveError, ValueError):
    pass


class ParseError(EigsolveError, ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class UnknownPreset(EigsolveError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown preset"


class MaxIterationsExceeded(EigsolveError, RuntimeError):
    """A stage hit its iteration cap before the range amplitude fell below threshold."""


class MaxEvalsExceeded(EigsolveError, RuntimeError):
    pass
