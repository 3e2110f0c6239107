"""Gap probabilities of unitary ensembles on a window (a, b) via ladder operators."""

from .errors import (ConvergenceError, DomainError, EnsembleMismatchError,
                     IllConditionedError, InvalidPointError, UnigapError)
from .numerics import PrecisionPolicy
from .weights import Window, WeightSpec

__all__ = [
    "ConvergenceError", "DomainError", "EnsembleMismatchError", "IllConditionedError",
    "InvalidPointError", "UnigapError", "PrecisionPolicy", "Window", "WeightSpec",
]
