"""Disturbance-immune weight sharing for a toy architecture-search supernet."""

from .errors import ConfigError, DiwsError, NumericalError, ParseError, UsageError
from .net import Batch
from .policy import PolicyParams
from .projection import ProjectionState
from .space import ArchEncoding, CellSpec, SharedParamStore
from .training import RunRecord, TrainConfig

__all__ = [
    "ArchEncoding",
    "Batch",
    "CellSpec",
    "ConfigError",
    "DiwsError",
    "NumericalError",
    "ParseError",
    "PolicyParams",
    "ProjectionState",
    "RunRecord",
    "SharedParamStore",
    "TrainConfig",
    "UsageError",
]
