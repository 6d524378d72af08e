"""Exception types shared across the package (and mapped to CLI exit codes)."""


class DataError(ValueError):
    """Bad input data: unreadable files, non-numeric cells, shape mismatches."""


class FitError(RuntimeError):
    """A fit could not proceed (degenerate inputs, empty partitions)."""


class InfeasibleError(RuntimeError):
    """The requested computation exceeds a hard size limit."""

    def __init__(self, message, size=None, cap=None):
        super().__init__(message)
        self.size = size
        self.cap = cap
