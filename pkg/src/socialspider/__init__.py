"""Social Spider Algorithm for bound-constrained continuous minimization."""

from .core import (
    ConfigurationError,
    EngineState,
    InvalidBaselineError,
    RunRecord,
    SearchSpace,
    SsaError,
    SsaParams,
    run,
    step,
)
from .objectives import ObjectiveSpec, UserObjective, get_objective, make_benchmark, register
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "EngineState",
    "InvalidBaselineError",
    "ObjectiveSpec",
    "RngStream",
    "RunRecord",
    "SearchSpace",
    "SsaError",
    "SsaParams",
    "UserObjective",
    "get_objective",
    "make_benchmark",
    "register",
    "run",
    "step",
]
