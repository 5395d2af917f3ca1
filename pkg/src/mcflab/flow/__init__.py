"""Mean curvature flow of hypersurfaces of revolution."""

from .engine import (FlowConfig, cfl_limit, normal_speed, polar_weights, remesh_polar,
                     run_flow, step_mcf)
from .history import FlowHistory, Snapshot, Termination

__all__ = [
    "FlowConfig", "FlowHistory", "Snapshot", "Termination", "cfl_limit", "normal_speed",
    "polar_weights", "remesh_polar", "run_flow", "step_mcf",
]
