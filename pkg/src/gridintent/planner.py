"""Per-goal MDP layer: transition model, rewards, value iteration, Q-values.

One hypothesis per goal ("the agent wants goal i; every other goal is an
ordinary free tile").  For each hypothesis the planner derives a dense
reward table from visibility-biased paths, solves the values by synchronous
value iteration, and answers online Q-value queries (optimal/worst action,
consistency against Stay).

State indexing is dense row-major over (y, x, heading):
``state = (y * width + x) * 8 + heading``.  Entries for occupied cells are
never valid agent states; they are pinned at V = 0 with floor rewards.
"""

from __future__ import annotations

import collections
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .gridworld import GridMap, N_HEADINGS, Pose, angle_diff, compute_visibility
from .pathing import modified_astar, path_orientation

# ---------- action space ----------

#: Fixed action ordering; indices are part of every serialized artifact.
ACTIONS = ("Up", "Down", "Left", "Right", "R", "L", "Stay")
UP, DOWN, LEFT, RIGHT, TURN_CW, TURN_CCW, STAY = range(7)
N_ACTIONS = 7

#: Movement deltas for the four translations, in action order.
MOVE_DELTAS = ((0, -1), (0, 1), (-1, 0), (1, 0))

_ACTION_LOOKUP = {name.lower(): i for i, name in enumerate(ACTIONS)}
_ACTION_LOOKUP.update(
    {"turncw": TURN_CW, "cw": TURN_CW, "turnccw": TURN_CCW, "ccw": TURN_CCW, "s": STAY}
)


def parse_action(name) -> int:
    """Canonical action index for a name (case-insensitive, common aliases)."""
    if isinstance(name, (int, np.integer)):
        if 0 <= int(name) < N_ACTIONS:
            return int(name)
        raise ValueError(f"action index out of range: {name}")
    idx = _ACTION_LOOKUP.get(str(name).strip().lower())
    if idx is None:
        raise ValueError(f"unknown action {name!r}; expected one of {', '.join(ACTIONS)}")
    return idx


def action_name(index: int) -> str:
    return ACTIONS[index]


# ---------- transition model ----------


def base_transition_matrix(eps_move: float) -> np.ndarray:
    """Unblocked realization probabilities, row = intended, column = realized."""
    e = float(eps_move)
    return np.array(
        [
            [1.0 - 2.0 * e, 0.0, e, e, 0.0, 0.0, 0.0],
            [0.0, 1.0 - 2.0 * e, e, e, 0.0, 0.0, 0.0],
            [e, e, 1.0 - 2.0 * e, 0.0, 0.0, 0.0, 0.0],
            [e, e, 0.0, 1.0 - 2.0 * e, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0 - e, 0.0, e],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0 - e, e],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_eps_move(eps_move: float):
    if not 0.0 < eps_move < 0.5:
        raise ValueError("eps_move must be in (0, 0.5)")


def build_transition(grid: GridMap, state: Pose, intended: int, eps_move: float) -> np.ndarray:
    """Probability row over realized actions for one (state, intended) pair.

    Starts from the unblocked row; any translation whose destination is
    occupied or out of bounds donates its probability to Stay.  Turning is
    never blocked.
    """
    _check_eps_move(eps_move)
    grid.check_pose(state)
    row = base_transition_matrix(eps_move)[parse_action(intended)].copy()
    for m, (dx, dy) in enumerate(MOVE_DELTAS):
        if row[m] != 0.0 and not grid.is_free(state.x + dx, state.y + dy):
            row[STAY] += row[m]
            row[m] = 0.0
    return row


def successor_pose(grid: GridMap, state: Pose, realized: int) -> Pose:
    """Pose after a realized action; blocked translations leave it unchanged."""
    realized = parse_action(realized)
    if realized < 4:
        dx, dy = MOVE_DELTAS[realized]
        if grid.is_free(state.x + dx, state.y + dy):
            return Pose(state.x + dx, state.y + dy, state.heading)
        return state
    if realized == TURN_CW:
        return Pose(state.x, state.y, (state.heading - 1) % N_HEADINGS)
    if realized == TURN_CCW:
        return Pose(state.x, state.y, (state.heading + 1) % N_HEADINGS)
    return state


def successor_table(grid: GridMap) -> np.ndarray:
    """(n_states, 7) state index of each realized action's successor.

    Blocked translations map to the state itself (their probability is zero
    after blocking, the self-map just keeps the table total).
    """
    w, h = grid.width, grid.height
    n = w * h * N_HEADINGS
    s = np.arange(n)
    cell = s // N_HEADINGS
    k = s % N_HEADINGS
    x = cell % w
    y = cell // w

    succ = np.empty((n, N_ACTIONS), dtype=np.int64)
    occ = grid.occupied
    for m, (dx, dy) in enumerate(MOVE_DELTAS):
        nx, ny = x + dx, y + dy
        ok = (nx >= 0) & (nx < w) & (ny >= 0) & (ny < h)
        free = np.zeros_like(ok)
        free[ok] = ~occ[ny[ok], nx[ok]]
        target = np.where(free, (ny * w + nx) * N_HEADINGS + k, s)
        succ[:, m] = target
    succ[:, TURN_CW] = cell * N_HEADINGS + (k - 1) % N_HEADINGS
    succ[:, TURN_CCW] = cell * N_HEADINGS + (k + 1) % N_HEADINGS
    succ[:, STAY] = s
    return succ


def transition_tensor(grid: GridMap, eps_move: float) -> np.ndarray:
    """(n_states, 7, 7) realization probabilities with blocking applied."""
    _check_eps_move(eps_move)
    w, h = grid.width, grid.height
    n = w * h * N_HEADINGS
    base = base_transition_matrix(eps_move)
    P = np.broadcast_to(base, (n, N_ACTIONS, N_ACTIONS)).copy()

    s = np.arange(n)
    cell = s // N_HEADINGS
    x = cell % w
    y = cell // w
    occ = grid.occupied
    for m, (dx, dy) in enumerate(MOVE_DELTAS):
        nx, ny = x + dx, y + dy
        ok = (nx >= 0) & (nx < w) & (ny >= 0) & (ny < h)
        free = np.zeros_like(ok)
        free[ok] = ~occ[ny[ok], nx[ok]]
        blocked = ~free
        P[blocked, :, STAY] += P[blocked, :, m]
        P[blocked, :, m] = 0.0
    return P


# ---------- rewards ----------

GOAL_REWARD = math.pi

#: How hidden/unreachable paths are scored: "eps-pi" applies the average-
#: orientation formula uniformly (difference pi plus the base penalty);
#: "pi" pins the floor at exactly -pi instead.
REWARD_FLOORS = ("eps-pi", "pi")


def reward_floor_value(eps_reward: float, reward_floor: str = "eps-pi") -> float:
    if reward_floor not in REWARD_FLOORS:
        raise ValueError(f"reward_floor must be one of {REWARD_FLOORS}")
    if reward_floor == "pi":
        return -math.pi
    return -(eps_reward + math.pi)


def visibility_fields(grid: GridMap, fov_half_angle: float):
    """Per-state visibility fields (None on occupied cells), reusable
    across hypotheses since sight does not depend on the desired goal."""
    fields = []
    for cell in range(grid.n_cells):
        x, y = grid.cell_of(cell)
        for k in range(N_HEADINGS):
            if grid.occupied[y, x]:
                fields.append(None)
            else:
                fields.append(compute_visibility(grid, Pose(x, y, k), fov_half_angle))
    return fields


def _reachable_cells(grid: GridMap, goal) -> np.ndarray:
    """Boolean per-cell map of cells with any 4-connected path to the goal."""
    reach = np.zeros((grid.height, grid.width), dtype=bool)
    gx, gy = goal
    reach[gy, gx] = True
    queue = collections.deque([(gx, gy)])
    while queue:
        x, y = queue.popleft()
        for dx, dy in MOVE_DELTAS:
            nx, ny = x + dx, y + dy
            if grid.is_free(nx, ny) and not reach[ny, nx]:
                reach[ny, nx] = True
                queue.append((nx, ny))
    return reach


def compute_rewards(
    grid: GridMap,
    goal_index: int,
    *,
    fov_half_angle: float,
    eps_astar: float = 1e-3,
    eps_reward: float = 0.1,
    reward_floor: str = "eps-pi",
    vis_fields=None,
) -> np.ndarray:
    """Dense reward table for one goal hypothesis.

    Goal-cell states score pi regardless of heading.  Every other state is
    penalized by the base cost plus how far the agent's heading deviates
    from the average bearing of the visible part of its best path; states
    that see no path tile (or cannot reach the goal at all) take the floor.
    """
    if not 0 <= goal_index < grid.n_goals:
        raise ValueError(f"goal_index must be in 0..{grid.n_goals - 1}")
    floor = reward_floor_value(eps_reward, reward_floor)
    goal = grid.goals[goal_index]
    if vis_fields is None:
        vis_fields = visibility_fields(grid, fov_half_angle)

    reach = _reachable_cells(grid, goal)
    n_free = int(np.sum(~grid.occupied))
    n_cut_off = int(np.sum(~grid.occupied & ~reach))
    if n_cut_off:
        warnings.warn(
            f"goal {grid.goal_labels[goal_index]} at {goal} is unreachable from "
            f"{n_cut_off} of {n_free} free cells; those states take the floor reward",
            RuntimeWarning,
            stacklevel=2,
        )

    rewards = np.full(grid.n_cells * N_HEADINGS, floor)
    for cell in range(grid.n_cells):
        x, y = grid.cell_of(cell)
        if grid.occupied[y, x]:
            continue
        base = cell * N_HEADINGS
        if (x, y) == goal:
            rewards[base : base + N_HEADINGS] = GOAL_REWARD
            continue
        if not reach[y, x]:
            continue
        for k in range(N_HEADINGS):
            vis = vis_fields[base + k]
            path = modified_astar(grid, (x, y), goal, vis, eps_astar)
            orientation = path_orientation(Pose(x, y, k), path, vis)
            if orientation.visible_count == 0:
                rewards[base + k] = floor
            else:
                diff = angle_diff(orientation.theta_goal, Pose(x, y, k).angle)
                rewards[base + k] = -(eps_reward + diff)
    return rewards


# ---------- value iteration & action values ----------


def value_iteration(
    grid: GridMap,
    rewards: np.ndarray,
    *,
    gamma: float = 0.95,
    eta: float = 0.01,
    eps_move: float = 0.1,
    max_sweeps: int = 10_000,
):
    """Synchronous Bellman sweeps from V = 0 until the total absolute
    change of one sweep drops below ``eta``.

    Returns (values, sweeps).  Sweeps are double-buffered (the whole sweep
    reads the previous table), so results are order-independent and
    reproducible.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must be in (0, 1)")
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    n = grid.n_cells * N_HEADINGS
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.shape != (n,):
        raise ValueError(f"rewards must have shape ({n},)")

    P = transition_tensor(grid, eps_move)
    succ = successor_table(grid)
    occupied_states = np.repeat(grid.occupied.ravel(), N_HEADINGS)

    V = np.zeros(n)
    for sweep in range(1, max_sweeps + 1):
        gain = rewards[succ] + gamma * V[succ]  # (n, 7) value of each realized action
        Q = np.einsum("sar,sr->sa", P, gain)
        V_new = Q.max(axis=1)
        V_new[occupied_states] = 0.0
        delta = np.abs(V_new - V).sum()
        V = V_new
        if delta < eta:
            return V, sweep
    raise RuntimeError(f"value iteration did not converge within {max_sweeps} sweeps")


def q_values(
    grid: GridMap,
    rewards: np.ndarray,
    values: np.ndarray,
    state: Pose,
    *,
    gamma: float = 0.95,
    eps_move: float = 0.1,
) -> np.ndarray:
    """Expected reward-plus-discounted-value of each of the 7 actions."""
    grid.check_pose(state)
    q = np.empty(N_ACTIONS)
    succ_idx = np.empty(N_ACTIONS, dtype=np.int64)
    for r in range(N_ACTIONS):
        nxt = successor_pose(grid, state, r)
        succ_idx[r] = (nxt.y * grid.width + nxt.x) * N_HEADINGS + nxt.heading
    gain = rewards[succ_idx] + gamma * values[succ_idx]
    for a in range(N_ACTIONS):
        row = build_transition(grid, state, a, eps_move)
        q[a] = float(row @ gain)
    return q


def action_value(grid, rewards, values, state, action, *, gamma=0.95, eps_move=0.1) -> float:
    return float(
        q_values(grid, rewards, values, state, gamma=gamma, eps_move=eps_move)[
            parse_action(action)
        ]
    )


def optimal_action(grid, rewards, values, state, *, gamma=0.95, eps_move=0.1) -> int:
    """Q-maximizing action.

    Stay is the incumbent: an action must *strictly* beat Stay's Q to be
    optimal (turning on the goal cell ties Stay exactly and must not win).
    Among strict improvers, ties break toward the earliest action index.
    """
    q = q_values(grid, rewards, values, state, gamma=gamma, eps_move=eps_move)
    best = STAY
    for action in range(N_ACTIONS):
        if q[action] > q[best]:
            best = action
    return best


def worst_action(grid, rewards, values, state, *, gamma=0.95, eps_move=0.1) -> int:
    """Q-minimizing action; ties break toward the earliest action index."""
    return int(
        np.argmin(q_values(grid, rewards, values, state, gamma=gamma, eps_move=eps_move))
    )


def is_consistent(grid, rewards, values, state, action, *, gamma=0.95, eps_move=0.1) -> bool:
    """An action is consistent with a hypothesis when it is at least as
    good as standing still under that hypothesis."""
    q = q_values(grid, rewards, values, state, gamma=gamma, eps_move=eps_move)
    return bool(q[parse_action(action)] >= q[STAY])


# ---------- precomputed tables & persistence ----------

TABLES_FORMAT = "gridintent-tables"
TABLES_VERSION = 1

#: Parameters that must match between a tables artifact and its consumer.
TABLE_PARAM_FIELDS = (
    "gamma",
    "eta",
    "eps_move",
    "eps_reward",
    "eps_astar",
    "fov_half_angle",
    "reward_floor",
)


class TablesMismatchError(Exception):
    """A tables artifact does not belong to the requested map/parameters."""


@dataclass
class HypothesisTables:
    """Converged reward and value tables for one goal hypothesis."""

    goal_index: int
    goal_cell: tuple
    rewards: np.ndarray
    values: np.ndarray
    sweeps: int


class PrecomputeTables:
    """All per-hypothesis tables for one map plus the parameters that
    produced them; serializable to a single binary artifact."""

    def __init__(self, grid: GridMap, params: dict, hypotheses):
        self.grid = grid
        self.params = {k: params[k] for k in TABLE_PARAM_FIELDS}
        self.hypotheses = list(hypotheses)
        self.map_hash = grid.content_hash()
        if len(self.hypotheses) != grid.n_goals:
            raise ValueError("one hypothesis table per goal is required")

    # ---------- construction ----------

    @classmethod
    def build(
        cls,
        grid: GridMap,
        *,
        gamma: float = 0.95,
        eta: float = 0.01,
        eps_move: float = 0.1,
        eps_reward: float = 0.1,
        eps_astar: float = 1e-3,
        fov_half_angle: float = math.pi / 2,
        reward_floor: str = "eps-pi",
        max_sweeps: int = 10_000,
    ) -> "PrecomputeTables":
        """Full offline precompute: rewards (visibility + per-state paths)
        and value iteration for every goal hypothesis."""
        params = dict(
            gamma=gamma,
            eta=eta,
            eps_move=eps_move,
            eps_reward=eps_reward,
            eps_astar=eps_astar,
            fov_half_angle=fov_half_angle,
            reward_floor=reward_floor,
        )
        vis = visibility_fields(grid, fov_half_angle)
        hypotheses = []
        for i, goal in enumerate(grid.goals):
            rewards = compute_rewards(
                grid,
                i,
                fov_half_angle=fov_half_angle,
                eps_astar=eps_astar,
                eps_reward=eps_reward,
                reward_floor=reward_floor,
                vis_fields=vis,
            )
            values, sweeps = value_iteration(
                grid, rewards, gamma=gamma, eta=eta, eps_move=eps_move, max_sweeps=max_sweeps
            )
            hypotheses.append(
                HypothesisTables(
                    goal_index=i,
                    goal_cell=goal,
                    rewards=rewards,
                    values=values,
                    sweeps=sweeps,
                )
            )
        return cls(grid, params, hypotheses)

    # ---------- persistence ----------

    def header(self) -> dict:
        return {
            "format": TABLES_FORMAT,
            "version": TABLES_VERSION,
            "map_hash": self.map_hash,
            "width": self.grid.width,
            "height": self.grid.height,
            "n_states": self.grid.n_cells * N_HEADINGS,
            "goals": [
                {"label": lbl, "x": gx, "y": gy}
                for (gx, gy), lbl in zip(self.grid.goals, self.grid.goal_labels)
            ],
            "params": dict(self.params),
            "sweeps": [h.sweeps for h in self.hypotheses],
            "state_order": "y,x,heading",
            "arrays": ["rewards", "values"],
            "dtype": "<f8",
        }

    def save(self, path):
        """Write the artifact: one JSON header line, then raw little-endian
        float64 rewards and values per hypothesis, in goal order."""
        header = json.dumps(self.header(), sort_keys=True, separators=(",", ":"))
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii") + b"\n")
            for hyp in self.hypotheses:
                fh.write(np.ascontiguousarray(hyp.rewards, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(hyp.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, grid: GridMap, expected_params: dict = None) -> "PrecomputeTables":
        """Load an artifact and verify it belongs to ``grid`` (by content
        hash) and, when given, to ``expected_params`` (exact match)."""
        with open(path, "rb") as fh:
            header_line = fh.readline()
            try:
                header = json.loads(header_line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"not a tables artifact: {path}") from exc
            if header.get("format") != TABLES_FORMAT or header.get("version") != TABLES_VERSION:
                raise TablesMismatchError(
                    f"unsupported tables format/version in {path}: "
                    f"{header.get('format')}/{header.get('version')}"
                )
            if header["map_hash"] != grid.content_hash():
                raise TablesMismatchError(
                    "tables were precomputed for a different map:\n"
                    f"  tables map_hash: {header['map_hash']}\n"
                    f"  current map_hash: {grid.content_hash()}"
                )
            if expected_params is not None:
                diffs = [
                    f"  {k}: tables={header['params'].get(k)!r} requested={expected_params[k]!r}"
                    for k in TABLE_PARAM_FIELDS
                    if header["params"].get(k) != expected_params[k]
                ]
                if diffs:
                    raise TablesMismatchError(
                        "tables were precomputed with different parameters:\n" + "\n".join(diffs)
                    )
            n = header["n_states"]
            if n != grid.n_cells * N_HEADINGS:
                raise TablesMismatchError("state count mismatch between tables and map")
            hypotheses = []
            for i, goal in enumerate(grid.goals):
                raw = fh.read(2 * n * 8)
                if len(raw) != 2 * n * 8:
                    raise ValueError(f"tables artifact truncated: {path}")
                block = np.frombuffer(raw, dtype="<f8")
                hypotheses.append(
                    HypothesisTables(
                        goal_index=i,
                        goal_cell=goal,
                        rewards=block[:n].copy(),
                        values=block[n:].copy(),
                        sweeps=header["sweeps"][i],
                    )
                )
            if fh.read(1):
                raise ValueError(f"trailing bytes in tables artifact: {path}")
        return cls(grid, header["params"], hypotheses)
