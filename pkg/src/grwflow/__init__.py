"""Volume-preserving curvature flow of spacelike graphs in warped-product spacetimes.

The flow is used as a numerical check of the isoperimetric inequality comparing
a graph's area with that of the coordinate slice enclosing the same volume.
"""

from .errors import (ConfigError, GRWError, InvalidWarpingError, SpacelikeViolation,
                     WarpingDomainError)
from .fiber import FiberGrid
from .flow import FlowConfig, FlowResult, FlowTrace, run, step
from .geometry import GraphState
from .integrals import area, enclosed_volume, functionals, oscillation
from .isoperimetric import IsoperimetricProfile, Verdict, verdict
from .warping import WarpingFactor, ncc_holds, ncc_margin

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "GRWError", "InvalidWarpingError", "SpacelikeViolation", "WarpingDomainError",
    "FiberGrid", "FlowConfig", "FlowResult", "FlowTrace", "run", "step", "GraphState",
    "area", "enclosed_volume", "functionals", "oscillation", "IsoperimetricProfile", "Verdict",
    "verdict", "WarpingFactor", "ncc_holds", "ncc_margin",
]
