"""benchsim: a deterministic 2D benchmark simulator.

Three task environments (multi-room exploration cleanup, multi-agent
cooperative search, crowd social navigation), classical planner baselines
(A*, DWA, MPPI), a social-force crowd model, metric pipelines, vectorized
execution, and a live teleoperation server.
"""

__version__ = "0.1.0"
