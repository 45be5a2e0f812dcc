"""Input-validation helpers shared by the engine, CLI and estimators."""

from __future__ import annotations

import math

from .gridworld import GridMap, Pose


def check_range(name, value, lo, hi, *, lo_open=False, hi_open=False):
    """Validate a numeric parameter against an (optionally open) interval."""
    value = float(value)
    if math.isnan(value):
        raise ValueError(f"{name} must not be NaN")
    lo_ok = value > lo if lo_open else value >= lo
    hi_ok = value < hi if hi_open else value <= hi
    if not (lo_ok and hi_ok):
        left = "(" if lo_open else "["
        right = ")" if hi_open else "]"
        raise ValueError(f"{name} must be in {left}{lo:g}, {hi:g}{right}, got {value:g}")
    return value


def check_choice(name, value, choices):
    if value not in choices:
        raise ValueError(f"{name} must be one of {', '.join(choices)}; got {value!r}")
    return value


def check_positive_int(name, value, minimum=1):
    ivalue = int(value)
    if ivalue != value or ivalue < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return ivalue


def check_pose(grid: GridMap, pose) -> Pose:
    """Coerce dict/tuple/Pose input to a Pose on a free cell of ``grid``."""
    if isinstance(pose, Pose):
        candidate = pose
    elif isinstance(pose, dict):
        try:
            candidate = Pose(int(pose["x"]), int(pose["y"]), int(pose["heading"]))
        except KeyError as exc:
            raise ValueError(f"pose is missing field {exc.args[0]!r}") from None
    else:
        x, y, heading = pose
        candidate = Pose(int(x), int(y), int(heading))
    return grid.check_pose(candidate)


def check_actions(names) -> list:
    """Canonicalize a sequence of action names/indices to indices."""
    from .planner import parse_action

    return [parse_action(name) for name in names]
