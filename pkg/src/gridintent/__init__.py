"""Grid-world action validation and online goal-desire estimation.

The pipeline: a per-goal MDP (visibility-aware rewards, value iteration)
scores every executed action, and a hidden-Markov desire filter turns those
scores into per-step probabilities over "wants goal i", "goal unknown" and
"behaving irrationally".
"""

__version__ = "0.1.0"

from .engine import RunParams, Scenario, Session, load_scenario, precompute, run_replay
from .estimators import IntentionRecognizer
from .gridworld import GridMap, MapParseError, Pose, compute_visibility, parse_map
from .intent import (
    DesireFilter,
    HmmParams,
    IntentTracker,
    ObservationVector,
    desire_state_names,
    emission_row,
    estimate_desires,
    initial_distribution,
    observe,
    rationality_phi,
)
from .pathing import Path, PathOrientation, modified_astar, path_orientation, visibility_heuristic
from .planner import (
    ACTIONS,
    PrecomputeTables,
    TablesMismatchError,
    action_value,
    build_transition,
    compute_rewards,
    is_consistent,
    optimal_action,
    parse_action,
    q_values,
    value_iteration,
    worst_action,
)

__all__ = [
    "ACTIONS",
    "DesireFilter",
    "GridMap",
    "HmmParams",
    "IntentTracker",
    "IntentionRecognizer",
    "MapParseError",
    "ObservationVector",
    "Path",
    "PathOrientation",
    "Pose",
    "PrecomputeTables",
    "RunParams",
    "Scenario",
    "Session",
    "TablesMismatchError",
    "action_value",
    "build_transition",
    "compute_rewards",
    "compute_visibility",
    "desire_state_names",
    "emission_row",
    "estimate_desires",
    "initial_distribution",
    "is_consistent",
    "load_scenario",
    "modified_astar",
    "observe",
    "optimal_action",
    "parse_action",
    "parse_map",
    "path_orientation",
    "precompute",
    "q_values",
    "rationality_phi",
    "run_replay",
    "value_iteration",
    "visibility_heuristic",
    "worst_action",
    "__version__",
]
