"""Custom exceptions."""
from typing import Optional

import numpy as np


class ImplicitModelError(Exception):
    """Base exception."""
    pass


class DegenerateDistributionError(ImplicitModelError):
    """All weights are zero (every log-weight is -inf)."""
    pass


class ImproperDistributionError(ImplicitModelError):
    """Parameters do not define an integrable density."""
    pass


class ConvergenceError(ImplicitModelError):
    """Iterative solver did not converge."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class LemmaPreconditionError(ImplicitModelError):
    """Transition matrix is not strictly positive."""
    pass


class TrainingDivergenceError(ImplicitModelError):
    """Objective or parameters became non-finite."""

    def __init__(self, message: str, last_state: Optional[np.ndarray] = None):
        super().__init__(message)
        self.last_state = last_state


class FeasibilityError(ImplicitModelError):
    """Parameter projection could not restore a proper model."""
    pass


class EnumerationBudgetError(ImplicitModelError):
    """Brute-force enumeration exceeds its budget."""
    pass


class DimensionMismatchError(ImplicitModelError):
    """Inputs have inconsistent shapes."""
    pass


class ArchiveFormatError(ImplicitModelError):
    """Parameter archive is malformed or incompatible."""
    pass


class CorpusError(ImplicitModelError):
    """Image corpus could not be read."""
    pass


class OutputError(ImplicitModelError):
    """Outputs could not be written."""
    pass


class ConfigError(ImplicitModelError):
    """Run configuration is invalid."""
    pass
