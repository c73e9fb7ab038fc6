"""Sequential-pass minimum-time routing of small UAVs through an unknown wind field."""

from windpass.grid import GridGraph, build_grid
from windpass.windfield import SignalParams, WindField, synthesize_field
from windpass.planner import PlannedPath, oracle_plan, plan

__all__ = [
    "GridGraph",
    "build_grid",
    "SignalParams",
    "WindField",
    "synthesize_field",
    "PlannedPath",
    "plan",
    "oracle_plan",
]

__version__ = "0.1.0"
