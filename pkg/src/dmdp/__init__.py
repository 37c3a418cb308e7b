"""Deterministic MDP solvers: value iteration, the history-walk algorithm,
phased policy iteration, and exact baselines for the maximum mean cycle."""
from .baselines import bf_positive_cycle, karp_mean, oracle_enumerate
from .experiments import find_in_history, find_in_policy, run_convergence_study
from .generators import gen_two_out_random, gen_uniform_m, gen_worst_case
from .graph import CycleReport, Edge, Graph, GraphFormatError, Walk, parse_edge_list, serialize_edge_list
from .history_walk import run_history_walk
from .phased import augmented_vi, phased_policy_iteration
from .scalar import EXACT, Approx, Exact, arith_for
from .value_iteration import ValueState, run_vi, vi_detect, vi_step

__version__ = "0.1.0"

__all__ = [
    "Approx", "CycleReport", "EXACT", "Edge", "Exact", "Graph", "GraphFormatError", "ValueState", "Walk",
    "arith_for", "augmented_vi", "bf_positive_cycle", "find_in_history", "find_in_policy",
    "gen_two_out_random", "gen_uniform_m", "gen_worst_case", "karp_mean", "oracle_enumerate",
    "parse_edge_list", "phased_policy_iteration", "run_convergence_study", "run_history_walk",
    "run_vi", "serialize_edge_list", "vi_detect", "vi_step",
]
