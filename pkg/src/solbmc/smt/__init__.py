"""SMT encoding of the transition system and the solver process driver."""

from .driver import (
    CheckResult, Sat, SolverConfig, SolverDriver, SolverProcessError,
    SolverSession, Unknown, Unsat,
)
from .encode import Encoder

__all__ = [
    "Encoder", "SolverDriver", "SolverConfig", "SolverSession",
    "SolverProcessError", "Sat", "Unsat", "Unknown", "CheckResult",
]
