"""Bundled SMT solver: CDCL SAT core, bit-blaster, SMT-LIB2 front."""

from .engine import EngineError, SmtEngine
from .sat import SatSolver

__all__ = ["SatSolver", "SmtEngine", "EngineError"]
