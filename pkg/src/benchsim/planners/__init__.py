"""Grid planning (A*) and local reactive control (DWA, MPPI, baselines)."""

from .astar import Path, PlannerError, Unreachable, astar
from .local import (DwaParams, MppiParams, RobotState, braking_rollout,
                    dwa_control, mppi_control, obstacle_points, select_target,
                    softmin_weights)
from .policies import (DwaNavigator, ExplorationScanPolicy, GreedyCoopPolicy,
                       MppiNavigator, OracleNavigator, available_policies,
                       make_policy, random_policy, register_policy)

__all__ = [
    "Path", "PlannerError", "Unreachable", "astar",
    "DwaParams", "MppiParams", "RobotState", "braking_rollout",
    "dwa_control", "mppi_control", "obstacle_points", "select_target",
    "softmin_weights",
    "DwaNavigator", "ExplorationScanPolicy", "GreedyCoopPolicy",
    "MppiNavigator", "OracleNavigator", "available_policies", "make_policy",
    "random_policy", "register_policy",
]
