"""Numerical engine for isometric flexions of semidiscrete ribbon surfaces."""

__version__ = "0.1.0"

from .errors import (
    DegeneracyError,
    DegenerateAnchorError,
    GenerationError,
    GridSizeError,
    HorizonError,
    ParallelTangentsError,
    RibbonflexError,
    TrajectoryError,
)
from .geometry import (
    InvariantField,
    LocalFrame,
    SampledCurve,
    SampledSurface,
    derivative,
    frame_at,
    genericity_margin,
    inner_geometry,
)
from .generators import generate

__all__ = [
    "DegeneracyError",
    "DegenerateAnchorError",
    "GenerationError",
    "GridSizeError",
    "HorizonError",
    "InvariantField",
    "LocalFrame",
    "ParallelTangentsError",
    "RibbonflexError",
    "SampledCurve",
    "SampledSurface",
    "TrajectoryError",
    "derivative",
    "frame_at",
    "generate",
    "genericity_margin",
    "inner_geometry",
]
