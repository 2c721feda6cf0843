"""SSP explicit and IMEX Runge-Kutta methods with stability, monotonicity and accuracy tooling."""

from .tableaux import AdditiveTableau, RKTableau, builtin, parse_tableau, serialize_tableau
from .stepper import SplitSystem, StepRecord, integrate, step

__all__ = [
    "AdditiveTableau",
    "RKTableau",
    "SplitSystem",
    "StepRecord",
    "builtin",
    "integrate",
    "parse_tableau",
    "serialize_tableau",
    "step",
]
__version__ = "0.1.0"
