"""Occupancy-grid world: map parsing, agent pose and cone-of-sight visibility.

Coordinate frame used everywhere in this package: x grows east (columns),
y grows south (rows), row 0 is the northern edge.  Headings are discretized
to multiples of pi/4; heading 0 points east and angles increase
counterclockwise, so pi/2 is north (y decreasing).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

N_HEADINGS = 8

#: Bearing comparisons against the cone edge tolerate this much slack so
#: that cells sitting exactly on the boundary (e.g. perpendicular cells at
#: fov_half_angle = pi/2) are classified identically on every platform.
CONE_EDGE_TOL = 1e-9


class MapParseError(ValueError):
    """Raised when a map file cannot be turned into a valid grid."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    return theta if theta < TWO_PI else 0.0


def angle_diff(a: float, b: float) -> float:
    """Absolute angular difference folded into [0, pi]."""
    d = math.fmod(abs(a - b), TWO_PI)
    return TWO_PI - d if d > math.pi else d


def heading_angle(index: int) -> float:
    """Angle in radians for a heading index (0..7)."""
    return (index % N_HEADINGS) * (math.pi / 4.0)


def bearing(dx: float, dy: float) -> float:
    """Bearing of a grid offset in the heading frame (pi/2 = north).

    The y sign is negated inside atan2 because y grows south while angles
    grow counterclockwise.
    """
    return wrap_angle(math.atan2(-dy, dx))


@dataclass(frozen=True)
class Pose:
    """Agent state: cell coordinates plus one of 8 discrete headings."""

    x: int
    y: int
    heading: int

    def __post_init__(self):
        if not 0 <= self.heading < N_HEADINGS:
            raise ValueError(f"heading index must be in 0..7, got {self.heading}")

    @property
    def angle(self) -> float:
        return heading_angle(self.heading)


class GridMap:
    """Immutable occupancy grid with an ordered list of goal cells.

    ``occupied`` is indexed [y][x].  Goals keep the digit labels they were
    parsed with and are ordered by label.
    """

    def __init__(self, occupied, goals, goal_labels=None):
        occ = np.asarray(occupied, dtype=bool)
        if occ.ndim != 2:
            raise ValueError("occupancy must be a 2D array")
        self.height, self.width = occ.shape
        if self.width < 1 or self.height < 1:
            raise ValueError("map must contain at least one cell")
        self._occupied = occ
        self._occupied.setflags(write=False)

        self.goals = tuple((int(x), int(y)) for x, y in goals)
        if goal_labels is None:
            goal_labels = tuple(range(1, len(self.goals) + 1))
        self.goal_labels = tuple(int(g) for g in goal_labels)
        if len(self.goal_labels) != len(self.goals):
            raise ValueError("goal_labels must match goals")
        if len(self.goals) < 1:
            raise ValueError("map must declare at least one goal")
        if len(set(self.goals)) != len(self.goals):
            raise ValueError("goal cells must be pairwise distinct")
        for (gx, gy) in self.goals:
            if not self.in_bounds(gx, gy):
                raise ValueError(f"goal ({gx},{gy}) outside the map")
            if occ[gy, gx]:
                raise ValueError(f"goal ({gx},{gy}) placed on an occupied cell")
        self._los = None

    # ---------- basic queries ----------

    @property
    def occupied(self) -> np.ndarray:
        return self._occupied

    @property
    def n_goals(self) -> int:
        return len(self.goals)

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and not self._occupied[y, x]

    def cell_index(self, x: int, y: int) -> int:
        return y * self.width + x

    def cell_of(self, index: int):
        return index % self.width, index // self.width

    def check_pose(self, pose: Pose) -> Pose:
        if not self.is_free(pose.x, pose.y):
            raise ValueError(f"pose ({pose.x},{pose.y}) is not a free cell")
        return pose

    # ---------- canonical text & hashing ----------

    def to_text(self) -> str:
        """Render the canonical single-character map text (hash input)."""
        label_at = {cell: str(lbl) for cell, lbl in zip(self.goals, self.goal_labels)}
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if self._occupied[y, x]:
                    row.append("#")
                else:
                    row.append(label_at.get((x, y), "."))
            rows.append("".join(row))
        return "\n".join(rows) + "\n"

    def content_hash(self) -> str:
        return "sha256:" + hashlib.sha256(self.to_text().encode("ascii")).hexdigest()

    # ---------- line of sight ----------

    def los_matrix(self) -> np.ndarray:
        """Pairwise cell-center line-of-sight matrix (n_cells x n_cells).

        Entry [s, t] is True when the segment between the centers of s and t
        crosses no occupied cell's interior, cells s and t themselves
        excepted.  Grazing a corner or running along an edge does not block.
        Computed lazily once per map and cached.
        """
        if self._los is None:
            self._los = _compute_los_matrix(self._occupied)
        return self._los


def parse_map(text: str) -> GridMap:
    """Parse ASCII map text: ``#`` occupied, ``.`` free, digits 1-9 goals.

    Rows must be equally long; goals are ordered by their digit label.
    Lines and columns in errors are 1-based.
    """
    lines = text.splitlines()
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MapParseError("map text is empty")

    width = len(lines[0])
    if width == 0:
        raise MapParseError("map row is empty", line=1)
    occupied = np.zeros((len(lines), width), dtype=bool)
    goals_by_label = {}
    for y, line in enumerate(lines):
        if len(line) != width:
            raise MapParseError(
                f"row has length {len(line)}, expected {width}", line=y + 1
            )
        for x, ch in enumerate(line):
            if ch == "#":
                occupied[y, x] = True
            elif ch == ".":
                pass
            elif ch.isdigit() and ch != "0":
                label = int(ch)
                if label in goals_by_label:
                    raise MapParseError(
                        f"duplicate goal digit {ch}", line=y + 1, column=x + 1
                    )
                goals_by_label[label] = (x, y)
            else:
                raise MapParseError(
                    f"unexpected character {ch!r}", line=y + 1, column=x + 1
                )
    if not goals_by_label:
        raise MapParseError("map declares no goal cells")
    labels = sorted(goals_by_label)
    return GridMap(
        occupied,
        goals=[goals_by_label[lbl] for lbl in labels],
        goal_labels=labels,
    )


def _compute_los_matrix(occupied: np.ndarray) -> np.ndarray:
    """Vectorized segment-vs-box occlusion test for every cell pair.

    All centers sit at half-integer coordinates and box edges at integers,
    so the Liang-Barsky entry/exit parameters never coincide with a center
    and exact float comparisons are reliable (inputs are small integers
    scaled by 0.5, divisions are correctly rounded).
    """
    height, width = occupied.shape
    n = width * height
    ys, xs = np.divmod(np.arange(n), width)
    centers = np.stack([xs + 0.5, ys + 0.5], axis=1)

    oy, ox = np.nonzero(occupied)
    los = np.ones((n, n), dtype=bool)
    if len(ox) == 0:
        return los

    lo = np.stack([ox.astype(float), oy.astype(float)], axis=1)  # (m, 2)
    hi = lo + 1.0
    obstacle_idx = oy * width + ox

    for s in range(n):
        p0 = centers[s]
        d = centers - p0  # (n, 2)
        t_min = np.zeros((n, len(ox)))
        t_max = np.ones((n, len(ox)))
        skip = np.zeros((n, len(ox)), dtype=bool)
        for axis in range(2):
            da = d[:, axis : axis + 1]  # (n, 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (lo[:, axis] - p0[axis]) / da
                t2 = (hi[:, axis] - p0[axis]) / da
            para = da == 0.0  # (n, 1) segment parallel to this axis
            inside = (lo[:, axis] < p0[axis]) & (p0[axis] < hi[:, axis])  # (m,)
            lo_t = np.minimum(t1, t2)
            hi_t = np.maximum(t1, t2)
            # Parallel & outside the slab: no intersection at all.
            skip |= para & ~inside
            lo_t = np.where(para, -np.inf, lo_t)
            hi_t = np.where(para, np.inf, hi_t)
            t_min = np.maximum(t_min, lo_t)
            t_max = np.minimum(t_max, hi_t)
        crossed = (t_max > t_min) & ~skip
        crossed[obstacle_idx, np.arange(len(ox))] = False  # target cell never blocks itself
        crossed[:, obstacle_idx == s] = False  # nor does the source cell
        los[s] = ~crossed.any(axis=1)
        los[s, s] = True
    return los


class VisibilityField:
    """Boolean per-cell visibility from one pose with a forward cone."""

    def __init__(self, source: Pose, fov_half_angle: float, visible: np.ndarray):
        self.source = source
        self.fov_half_angle = fov_half_angle
        self.visible = visible
        self.visible.setflags(write=False)

    def is_visible(self, x: int, y: int) -> bool:
        return bool(self.visible[y, x])


def compute_visibility(grid: GridMap, pose: Pose, fov_half_angle: float) -> VisibilityField:
    """Cells visible from ``pose``: unobstructed sight line within the cone.

    The agent's own cell is always visible.  The cone boundary is inclusive.
    """
    if not 0.0 < fov_half_angle <= math.pi:
        raise ValueError("fov_half_angle must be in (0, pi]")
    grid.check_pose(pose)
    los_row = grid.los_matrix()[grid.cell_index(pose.x, pose.y)]
    visible = los_row.copy().reshape(grid.height, grid.width)

    ys, xs = np.mgrid[0 : grid.height, 0 : grid.width]
    brg = np.arctan2(-(ys - pose.y), xs - pose.x)
    diff = np.abs(np.mod(brg - pose.angle + math.pi, TWO_PI) - math.pi)
    visible &= diff <= fov_half_angle + CONE_EDGE_TOL
    visible[pose.y, pose.x] = True
    return VisibilityField(pose, fov_half_angle, visible)
