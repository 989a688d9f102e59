"""Exception hierarchy shared by every scoretest service."""

from typing import Any, List, Optional


class ScoreTestError(Exception):
    """Base class; `kind` is the short tag reported by the CLI and HTTP layers."""

    kind = "error"


class InputError(ScoreTestError, ValueError):
    kind = "input"


class NumericError(ScoreTestError, ArithmeticError):
    """Non-finite values appeared during a computation.

    `location` names the offending component, theta value or chain state.
    """

    kind = "numeric"

    def __init__(self, message: str, location: Any = None):
        super().__init__(message)
        self.location = location


class CapabilityError(ScoreTestError):
    kind = "capability"


class TrainingError(ScoreTestError):
    kind = "training"

    def __init__(self, message: str, curve: Optional[List[float]] = None):
        super().__init__(message)
        self.curve = list(curve or [])


class DataError(ScoreTestError):
    kind = "data"

    def __init__(self, message: str, bad_rows: Optional[List[dict]] = None):
        super().__init__(message)
        self.bad_rows = list(bad_rows or [])


class ConvergenceWarning(UserWarning):
    pass
