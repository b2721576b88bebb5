"""Exception hierarchy shared across the toolkit."""


class OvrLogitError(Exception):
    """Base class for every error raised by this package."""


class DataError(OvrLogitError, ValueError):
    """Malformed or unusable input data."""


class EmptyDatasetError(DataError):
    pass


class NonNumericCellError(DataError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"non-numeric cell at row {row}, column {column!r}: {value!r}")
        self.row = row
        self.column = column
        self.value = value


class MissingLabelColumnError(DataError):
    pass


class NonFiniteValueError(DataError):
    pass


class ZeroVarianceError(DataError):
    def __init__(self, column: str):
        super().__init__(f"zero variance: {column}")
        self.column = column


class DimensionMismatchError(OvrLogitError, ValueError):
    pass


class ConfigError(OvrLogitError, ValueError):
    pass


class SolverError(OvrLogitError, RuntimeError):
    """Raised when a trainer cannot produce a usable model."""


class NonFiniteLossError(SolverError):
    def __init__(self, iteration: int):
        super().__init__(f"non-finite loss at iteration {iteration}")
        self.iteration = iteration


class SingularSystemError(SolverError):
    pass


class ConvergenceError(SolverError):
    """Iteration budget exhausted; ``last_iterate`` holds the final model."""

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
