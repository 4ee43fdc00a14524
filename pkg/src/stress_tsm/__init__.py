"""Stress-scenario synthesis and simulation for timer suppression in
reliable multicast loss recovery."""
from .fotg import (
    backward_search,
    classify_transitions,
    expand_branches,
    formulate_overhead_constraints,
    forward_verify,
    synthesize_response_time,
)
from .model import build_tsm
from .scenario import Scenario, dumps, loads
from .sim import SimConfig, oracle_max_responses, run, sweep
from .solve import ConstraintSystem, max_feasible_subset, solve_feasible
from .tasks import configure_timers, synthesize_topology
from .timers import TimerPolicy
from .vlan import DelayMatrix, Interval, compare_intervals

__version__ = "0.1.0"

__all__ = [
    "ConstraintSystem", "DelayMatrix", "Interval", "Scenario", "SimConfig", "TimerPolicy",
    "backward_search", "build_tsm", "classify_transitions", "compare_intervals", "configure_timers",
    "dumps", "expand_branches", "formulate_overhead_constraints", "forward_verify", "loads",
    "max_feasible_subset", "oracle_max_responses", "run", "solve_feasible", "sweep",
    "synthesize_response_time", "synthesize_topology",
]
