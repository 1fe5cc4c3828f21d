from __future__ import annotations


class FGEError(Exception):
    """Base class for all engine errors."""


class SchemaError(FGEError):
    def __init__(self, path, line, column, message):
        self.path, self.line, self.column = path, line, column
        super().__init__(f"{path}:{line}: column {column!r}: {message}")


class DuplicateKeyError(FGEError):
    pass


class SingularDesignError(FGEError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"design matrix is rank deficient at column {column!r}")


class DegenerateSampleError(FGEError):
    pass


class DegenerateHoldingsError(FGEError):
    pass


class InsufficientDataError(FGEError):
    pass


class DependencyError(FGEError):
    pass
