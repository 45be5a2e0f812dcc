"""Visibility-biased shortest paths on the grid.

The planner prefers, among all step-count-optimal 4-connected paths to a
goal, the one passing through the most currently-visible tiles.  This is
realized by discounting the unit movement cost by a small ``eps_astar`` on
visible tiles and searching with an equally discounted Manhattan heuristic.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .gridworld import GridMap, Pose, VisibilityField, bearing, wrap_angle


@dataclass(frozen=True)
class Path:
    """4-connected path; ``cells`` runs from the cell adjacent to the start
    through the goal cell (the start cell itself is excluded)."""

    cells: tuple
    step_count: int

    def __post_init__(self):
        assert self.step_count == len(self.cells)


@dataclass(frozen=True)
class PathOrientation:
    """Circular-mean bearing of the visible portion of a path."""

    theta_goal: float  # radians in [0, 2*pi)
    visible_count: int


def visibility_heuristic(cell, goal, visibility: VisibilityField, eps_astar: float) -> float:
    """Manhattan distance to the goal, discounted by eps_astar on visible cells."""
    dist = abs(goal[0] - cell[0]) + abs(goal[1] - cell[1])
    if visibility.is_visible(cell[0], cell[1]):
        return dist - eps_astar
    return float(dist)


def _check_eps_astar(grid: GridMap, eps_astar: float):
    if not 0.0 < eps_astar < 1.0:
        raise ValueError("eps_astar must be in (0, 1)")
    if eps_astar >= 1.0 / (2.0 * grid.width * grid.height):
        raise ValueError(
            "eps_astar too large for this map: the visibility discount must "
            "never trade extra steps for visible tiles "
            f"(need eps_astar < {1.0 / (2.0 * grid.width * grid.height):g})"
        )


def modified_astar(grid: GridMap, start, goal, visibility: VisibilityField, eps_astar: float = 1e-3):
    """A* from ``start`` to ``goal`` with visibility-discounted costs.

    Moving into a tile costs 1, minus ``eps_astar`` when the tile is
    currently visible; the heuristic applies the same discount to the
    Manhattan distance.  The discount is tiny, so the returned path is
    always step-count optimal, and among equally short paths the most
    visible one wins.  Ties beyond that break lexicographically on
    (f, h, cell index), which makes the search fully deterministic.

    Returns None when the goal is unreachable.  ``start == goal`` yields an
    empty path.
    """
    _check_eps_astar(grid, eps_astar)
    if not grid.is_free(*start):
        raise ValueError(f"start cell {start} is not free")
    if not grid.is_free(*goal):
        raise ValueError(f"goal cell {goal} is not free")
    if tuple(start) == tuple(goal):
        return Path(cells=(), step_count=0)

    width = grid.width
    start_idx = grid.cell_index(*start)
    goal_idx = grid.cell_index(*goal)

    # The discounted heuristic may overestimate the true remaining cost by
    # at most eps_astar * (manhattan - 1) < slack, so the search keeps
    # expanding until no frontier f-value can undercut the best goal cost.
    slack = eps_astar * (grid.width + grid.height)

    def h(idx):
        x, y = idx % width, idx // width
        d = abs(goal[0] - x) + abs(goal[1] - y)
        if visibility.visible[y, x]:
            return d - eps_astar
        return float(d)

    g_best = {start_idx: 0.0}
    parent = {}
    frontier = [(h(start_idx), h(start_idx), start_idx)]
    goal_cost = math.inf

    while frontier:
        f, _, idx = heapq.heappop(frontier)
        if f >= goal_cost + slack:
            break
        g = g_best.get(idx, math.inf)
        if f > g + h(idx):  # stale queue entry
            continue
        if idx == goal_idx:
            goal_cost = g
            continue
        x, y = idx % width, idx // width
        for nx, ny in ((x, y - 1), (x, y + 1), (x - 1, y), (x + 1, y)):
            if not grid.is_free(nx, ny):
                continue
            nidx = ny * width + nx
            step = 1.0 - (eps_astar if visibility.visible[ny, nx] else 0.0)
            ng = g + step
            if ng < g_best.get(nidx, math.inf):
                g_best[nidx] = ng
                parent[nidx] = idx
                nh = h(nidx)
                heapq.heappush(frontier, (ng + nh, nh, nidx))

    if not math.isfinite(goal_cost):
        return None

    cells = []
    idx = goal_idx
    while idx != start_idx:
        cells.append((idx % width, idx // width))
        idx = parent[idx]
    cells.reverse()
    return Path(cells=tuple(cells), step_count=len(cells))


def path_orientation(pose: Pose, path: Path, visibility: VisibilityField) -> PathOrientation:
    """Average bearing of the path tiles the agent currently sees.

    Bearings use the heading frame (x east, y south, angle pi/2 = north).
    The circular mean is atan2 of the summed sines and cosines; with no
    visible path tile the orientation defaults to directly behind the
    agent, wrap(theta_a + pi).
    """
    sin_sum = 0.0
    cos_sum = 0.0
    n_visible = 0
    for (x, y) in path.cells:
        if visibility.is_visible(x, y):
            theta = bearing(x - pose.x, y - pose.y)
            sin_sum += math.sin(theta)
            cos_sum += math.cos(theta)
            n_visible += 1
    if n_visible == 0:
        return PathOrientation(theta_goal=wrap_angle(pose.angle + math.pi), visible_count=0)
    return PathOrientation(theta_goal=wrap_angle(math.atan2(sin_sum, cos_sum)), visible_count=n_visible)
