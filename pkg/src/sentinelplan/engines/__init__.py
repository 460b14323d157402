"""Solvers: closed-form B=0, exact search, exhaustive oracle, external bridge."""

from ..ped import evaluate_ped
from .b0 import solve_b0
from .config import EngineConfig, solve
from .exact import SearchState, solve_exact
from .external import solve_external
from .oracle import ORACLE_CAPS, oracle_enumerate

__all__ = [
    "EngineConfig",
    "ORACLE_CAPS",
    "SearchState",
    "evaluate_ped",
    "oracle_enumerate",
    "solve",
    "solve_b0",
    "solve_exact",
    "solve_external",
]
