"""Online, collision-free path generation and navigation for UAV swarms."""

from .avoidance import BacktrackConfig
from .engine import SimConfig, SimResult, run_mission
from .harness import EXPERIMENTS, Metrics, build_experiment, compute_metrics, run_batch
from .world import Area, Cell, SafetyParams, manhattan, new_area, safe_distance

__all__ = [
    "Area",
    "BacktrackConfig",
    "Cell",
    "EXPERIMENTS",
    "Metrics",
    "SafetyParams",
    "SimConfig",
    "SimResult",
    "build_experiment",
    "compute_metrics",
    "manhattan",
    "new_area",
    "run_batch",
    "run_mission",
    "safe_distance",
]
