"""Exception hierarchy shared by all modules."""


class TeesError(Exception):
    """Base class for every error raised by the package."""


# --- data ingestion -------------------------------------------------------

class ParseError(TeesError):
    pass


class NonUniformStep(TeesError):
    pass


class EmptySeries(TeesError):
    pass


class IncompatibleStep(TeesError):
    pass


class NegativeScale(TeesError):
    pass


class MissingCounts(TeesError):
    pass


class ZeroSectorConnections(TeesError):
    pass


class ConfigError(TeesError):
    pass


# --- devices ----------------------------------------------------------------

class OutOfRange(TeesError):
    pass


class DegenerateFit(TeesError):
    pass


class SimultaneousChargeDischarge(TeesError):
    pass


# --- dispatch ---------------------------------------------------------------

class PartialDay(TeesError):
    pass


class WindowMismatch(TeesError):
    pass


class Infeasible(TeesError):
    pass


class SolverTimeout(TeesError):
    """Raised when the solver stops on its time limit.

    ``incumbent`` holds the best feasible solution found, or None.
    """

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


class ChunkError(TeesError):
    """Wraps a solve failure in a rolling run with the failing chunk index."""

    def __init__(self, chunk, cause):
        super().__init__(f"chunk {chunk}: {type(cause).__name__}: {cause}")
        self.chunk = chunk
        self.cause = cause


# --- criteria / mcda ----------------------------------------------------------

class PeakExceedsCatalog(TeesError):
    pass


class UnknownSize(TeesError):
    pass


class ZeroSales(TeesError):
    pass


class MissingBaseline(TeesError):
    pass


class LengthMismatch(TeesError):
    pass


class TooFewPathways(TeesError):
    pass
