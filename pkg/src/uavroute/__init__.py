"""Trajectory planning for UAV base stations on time-expanded graphs."""

from .baselines import run_cp, run_gp
from .crs import evaluate_profile, solve_crs
from .demand import propagate_demand, scenario_demand
from .drs import RouteGame, run_drs
from .economics import RewardModel
from .errors import (
    ConfigError,
    ConvergenceError,
    InfeasibleError,
    QuadratureError,
    ResourceLimitError,
)
from .scenario import Scenario, load_scenario, make_scenario
from .spgraph import Route, build_graph, solve_sp

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "InfeasibleError", "QuadratureError",
    "ResourceLimitError", "RewardModel", "Route", "RouteGame", "Scenario",
    "build_graph", "evaluate_profile", "load_scenario", "make_scenario",
    "propagate_demand", "run_cp", "run_drs", "run_gp", "scenario_demand",
    "solve_crs", "solve_sp",
]
