"""Preferential-attachment random graphs with multiple edge types."""
from .graphcore import DegreeCensus, InitialConfig, MultiTypeGraph, init_graph
from .models import (
    BatchDistribution,
    ModelSpec,
    RateDistribution,
    ba_step,
    grow,
    ie_step,
    probe_assumptions,
)
from .rng import RandomStream

__version__ = "0.1.0"

__all__ = [
    "BatchDistribution",
    "DegreeCensus",
    "InitialConfig",
    "ModelSpec",
    "MultiTypeGraph",
    "RandomStream",
    "RateDistribution",
    "ba_step",
    "grow",
    "ie_step",
    "init_graph",
    "probe_assumptions",
]
