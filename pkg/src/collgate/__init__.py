"""Collisional phase gate between two atoms in switched 1D harmonic microtraps."""

__version__ = "0.1.0"

from .errors import (AccuracyError, CollgateError, ContractError, DomainError, NotATrapError,
                     PhaseUndefinedError, ResolutionError, SolverError, SpinFlipHazard,
                     TruncationError)
from .model import GateSchedule, SITrap, TrapParams, preset

__all__ = [
    "__version__", "TrapParams", "SITrap", "GateSchedule", "preset",
    "CollgateError", "DomainError", "ContractError", "SolverError", "TruncationError",
    "ResolutionError", "PhaseUndefinedError", "AccuracyError", "NotATrapError", "SpinFlipHazard",
]
