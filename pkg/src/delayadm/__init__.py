"""delayadm: delay semigroups, quantitative norm bounds and control-operator
admissibility for retarded systems z'(t) = A z(t) + A1 z(t-1) + B u(t)."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .state import HistorySegment, LiftedState, inner, lifted_norm
from .system import DelaySystem, GridSpec, Trajectory

__all__ = [
    "BACKEND",
    "DelaySystem",
    "GridSpec",
    "HistorySegment",
    "LiftedState",
    "Trajectory",
    "inner",
    "lifted_norm",
    "__version__",
]
