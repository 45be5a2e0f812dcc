"""Session orchestration: precompute, step loop, replay and trace files.

A session owns one agent walking one map under one parameter set.  Every
step realizes the intended action through the slip model, scores the action
against each goal hypothesis, advances the desire filter, and appends an
auditable record.  Replays execute a scripted action list deterministically
so traces are reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .gridworld import GridMap, Pose, parse_map
from .intent import IntentTracker, ObservationVector, desire_state_names
from .planner import (
    ACTIONS,
    PrecomputeTables,
    TablesMismatchError,
    build_transition,
    is_consistent,
    parse_action,
    successor_pose,
)
from .validation import (
    check_actions,
    check_choice,
    check_pose,
    check_positive_int,
    check_range,
)

TRACE_FORMAT = "gridintent-trace"
TRACE_VERSION = 1
SCENARIO_FORMAT = "gridintent-scenario"

MODES = ("deterministic", "stochastic")


# ---------- run parameters ----------


@dataclass(frozen=True)
class RunParams:
    """Every knob of the pipeline, with defaults pinned to the shipped
    configuration.  ``table_params()`` is the subset a precompute artifact
    must agree on."""

    gamma: float = 0.95
    eta: float = 0.01
    eps_move: float = 0.1
    eps_reward: float = 0.1
    eps_astar: float = 1e-3
    fov_half_angle: float = math.pi / 2
    reward_floor: str = "eps-pi"
    alpha: float = 0.2
    gamma_hmm: float = 0.65
    delta: float = 0.1
    c_rational: float = 0.55
    c_unknown: float = 0.1
    phi_threshold: float = 0.5
    window: int = 3
    filter_kind: str = "viterbi"
    mode: str = "deterministic"
    seed: int = 0
    max_sweeps: int = 10_000

    def validate(self) -> "RunParams":
        check_range("gamma", self.gamma, 0.0, 1.0, lo_open=True, hi_open=True)
        check_range("eta", self.eta, 0.0, math.inf, lo_open=True)
        check_range("eps_move", self.eps_move, 0.0, 0.5, lo_open=True, hi_open=True)
        check_range("eps_reward", self.eps_reward, 0.0, math.inf, lo_open=True)
        check_range("eps_astar", self.eps_astar, 0.0, 1.0, lo_open=True, hi_open=True)
        check_range("fov_half_angle", self.fov_half_angle, 0.0, math.pi, lo_open=True)
        check_choice("reward_floor", self.reward_floor, ("eps-pi", "pi"))
        check_range("alpha", self.alpha, 0.0, 1.0)
        check_range("gamma_hmm", self.gamma_hmm, 0.0, 1.0)
        check_range("delta", self.delta, 0.0, 1.0)
        if self.gamma_hmm + self.delta / 2.0 > 1.0:
            raise ValueError("gamma_hmm + delta/2 must not exceed 1")
        check_range("c_rational", self.c_rational, 0.0, math.inf, lo_open=True)
        check_range("c_unknown", self.c_unknown, 0.0, math.inf, lo_open=True)
        check_range("phi_threshold", self.phi_threshold, 0.0, 1.0)
        check_positive_int("window", self.window)
        check_choice("filter_kind", self.filter_kind, ("viterbi", "forward"))
        check_choice("mode", self.mode, MODES)
        check_positive_int("max_sweeps", self.max_sweeps)
        int(self.seed)
        return self

    def table_params(self) -> dict:
        return {
            "gamma": self.gamma,
            "eta": self.eta,
            "eps_move": self.eps_move,
            "eps_reward": self.eps_reward,
            "eps_astar": self.eps_astar,
            "fov_half_angle": self.fov_half_angle,
            "reward_floor": self.reward_floor,
        }

    def hmm_params(self, n_goals: int):
        from .intent import HmmParams

        return HmmParams(
            n_goals=n_goals,
            alpha=self.alpha,
            gamma_hmm=self.gamma_hmm,
            delta=self.delta,
            c_rational=self.c_rational,
            c_unknown=self.c_unknown,
            phi_threshold=self.phi_threshold,
            window=self.window,
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict, base: "RunParams" = None) -> "RunParams":
        base = base if base is not None else cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return replace(base, **data).validate()

    def with_overrides(self, **overrides) -> "RunParams":
        return RunParams.from_dict(overrides, base=self)


def precompute(grid: GridMap, params: RunParams) -> PrecomputeTables:
    """Offline stage: reward + value tables for every goal hypothesis."""
    params.validate()
    return PrecomputeTables.build(
        grid,
        gamma=params.gamma,
        eta=params.eta,
        eps_move=params.eps_move,
        eps_reward=params.eps_reward,
        eps_astar=params.eps_astar,
        fov_half_angle=params.fov_half_angle,
        reward_floor=params.reward_floor,
        max_sweeps=params.max_sweeps,
    )


# ---------- scenarios ----------


@dataclass
class Scenario:
    """Scripted episode: a map, a start pose, an action list and overrides."""

    map: str
    start: Pose
    actions: list
    params: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        required = {"map", "start", "actions"}
        missing = required - set(data)
        if missing:
            raise ValueError(f"scenario is missing field(s): {', '.join(sorted(missing))}")
        unknown = set(data) - required - {"params", "seed", "format"}
        if unknown:
            raise ValueError(f"unknown scenario field(s): {', '.join(sorted(unknown))}")
        start = data["start"]
        pose = Pose(int(start["x"]), int(start["y"]), int(start["heading"]))
        actions = check_actions(data["actions"])
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ValueError("scenario `params` must be an object")
        return cls(
            map=str(data["map"]),
            start=pose,
            actions=actions,
            params=dict(params),
            seed=int(data.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        return {
            "format": SCENARIO_FORMAT,
            "map": self.map,
            "start": {"x": self.start.x, "y": self.start.y, "heading": self.start.heading},
            "actions": [ACTIONS[a] for a in self.actions],
            "params": dict(self.params),
            "seed": self.seed,
        }

    def save(self, path):
        with open(path, "w", encoding="ascii") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_scenario(path):
    """Parse a scenario file and its referenced map (path resolved relative
    to the scenario file).  Returns (scenario, grid)."""
    import os

    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"scenario file is not valid JSON: {path} ({exc})") from exc
    scenario = Scenario.from_dict(data)
    map_path = scenario.map
    if not os.path.isabs(map_path):
        map_path = os.path.join(os.path.dirname(os.path.abspath(path)), map_path)
    with open(map_path, "r", encoding="utf-8") as fh:
        grid = parse_map(fh.read())
    grid.check_pose(scenario.start)
    return scenario, grid


# ---------- sessions ----------


@dataclass
class StepRecord:
    """Everything observable about one executed step."""

    step: int
    intended: int
    realized: int
    pose_before: Pose
    pose_after: Pose
    observation: np.ndarray
    phi: float
    emission: np.ndarray
    estimate: np.ndarray
    consistent: list

    def to_dict(self) -> dict:
        return {
            "kind": "step",
            "step": self.step,
            "intended": ACTIONS[self.intended],
            "realized": ACTIONS[self.realized],
            "pose_before": _pose_dict(self.pose_before),
            "pose_after": _pose_dict(self.pose_after),
            "observation": [float(v) for v in self.observation],
            "phi": float(self.phi),
            "emission": [float(v) for v in self.emission],
            "estimate": [float(v) for v in self.estimate],
            "consistent": [bool(b) for b in self.consistent],
        }


def _pose_dict(pose: Pose) -> dict:
    return {"x": pose.x, "y": pose.y, "heading": pose.heading}


class Session:
    """One agent episode: pose, slip realization, filter state, history."""

    def __init__(
        self,
        grid: GridMap,
        tables: PrecomputeTables,
        params: RunParams,
        start: Pose,
        mode: str = None,
    ):
        params.validate()
        if tables.map_hash != grid.content_hash():
            raise TablesMismatchError("tables do not belong to this map")
        diffs = [
            f"  {k}: tables={tables.params.get(k)!r} requested={v!r}"
            for k, v in params.table_params().items()
            if tables.params.get(k) != v
        ]
        if diffs:
            raise TablesMismatchError(
                "tables were precomputed with different parameters:\n" + "\n".join(diffs)
            )
        self.grid = grid
        self.tables = tables
        self.params = params
        self.start = check_pose(grid, start)
        self.mode = check_choice("mode", mode if mode is not None else params.mode, MODES)
        self.tracker = IntentTracker(params.hmm_params(grid.n_goals), kind=params.filter_kind)
        self.state_names = desire_state_names(grid.n_goals)
        self.pose = self.start
        self.history = []
        self._rng = np.random.Generator(np.random.PCG64(params.seed))

    def reset(self):
        """Restore the start pose, the prior, and the RNG stream."""
        self.pose = self.start
        self.history = []
        self.tracker.reset()
        self._rng = np.random.Generator(np.random.PCG64(self.params.seed))

    # ---------- stepping ----------

    def _realize(self, row: np.ndarray) -> int:
        if self.mode == "deterministic":
            return int(np.argmax(row))
        cum = np.cumsum(row)
        u = self._rng.random() * cum[-1]
        return int(np.searchsorted(cum, u, side="right"))

    def step(self, intended) -> StepRecord:
        """Execute one intended action and fold it into the estimate.

        The slip model realizes the motion; the observation scores the
        intended action in deterministic mode (live input is intent) and
        the realized action in stochastic mode (logged data shows only
        realized motion).  The observation always uses the pre-move state.
        """
        intended = parse_action(intended)
        pose_before = self.pose
        row = build_transition(self.grid, pose_before, intended, self.params.eps_move)
        realized = self._realize(row)
        observed_action = intended if self.mode == "deterministic" else realized

        obs = self._observe(pose_before, observed_action)
        consistent = [
            is_consistent(
                self.grid,
                hyp.rewards,
                hyp.values,
                pose_before,
                observed_action,
                gamma=self.params.gamma,
                eps_move=self.params.eps_move,
            )
            for hyp in self.tables.hypotheses
        ]
        phi, emission, estimate = self.tracker.update(obs)
        self.pose = successor_pose(self.grid, pose_before, realized)

        record = StepRecord(
            step=len(self.history) + 1,
            intended=intended,
            realized=realized,
            pose_before=pose_before,
            pose_after=self.pose,
            observation=np.asarray(obs.values),
            phi=phi,
            emission=emission,
            estimate=estimate,
            consistent=consistent,
        )
        self.history.append(record)
        return record

    def _observe(self, pose: Pose, action: int) -> ObservationVector:
        from .intent import observe

        return observe(self.grid, self.tables, pose, action)

    # ---------- trace assembly ----------

    @property
    def estimate(self) -> np.ndarray:
        return self.tracker.filter.estimate

    def sequence_names(self) -> list:
        return [self.state_names[s] for s in self.tracker.filter.sequence()]

    def header_dict(self) -> dict:
        return {
            "kind": "header",
            "format": TRACE_FORMAT,
            "version": TRACE_VERSION,
            "map_hash": self.grid.content_hash(),
            "mode": self.mode,
            "seed": self.params.seed,
            "start": _pose_dict(self.start),
            "params": self.params.to_dict(),
            "states": list(self.state_names),
            "goal_labels": list(self.grid.goal_labels),
        }

    def summary_dict(self) -> dict:
        return {
            "kind": "summary",
            "steps": len(self.history),
            "final_estimate": [float(v) for v in self.estimate],
            "sequence": self.sequence_names(),
        }


def run_replay(grid: GridMap, tables: PrecomputeTables, params: RunParams, scenario: Scenario) -> Session:
    """Execute a scripted action list in deterministic mode."""
    params = params.with_overrides(seed=scenario.seed)
    session = Session(grid, tables, params, scenario.start, mode="deterministic")
    for action in scenario.actions:
        session.step(action)
    return session


# ---------- trace files ----------


def _json_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_trace(path, session: Session):
    """Line-delimited trace: header, one line per step, then a summary."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_json_line(session.header_dict()) + "\n")
        for record in session.history:
            fh.write(_json_line(record.to_dict()) + "\n")
        fh.write(_json_line(session.summary_dict()) + "\n")


def trace_bytes(session: Session) -> bytes:
    lines = [_json_line(session.header_dict())]
    lines += [_json_line(r.to_dict()) for r in session.history]
    lines.append(_json_line(session.summary_dict()))
    return ("\n".join(lines) + "\n").encode("ascii")


def read_trace(path) -> dict:
    """Parse a trace file into {'header': ..., 'steps': [...], 'summary': ...}."""
    header = None
    steps = []
    summary = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"trace line {line_no} is not valid JSON: {exc}") from exc
            kind = obj.get("kind")
            if kind == "header":
                if header is not None:
                    raise ValueError("trace has more than one header line")
                if obj.get("format") != TRACE_FORMAT:
                    raise ValueError(f"not a trace file: format {obj.get('format')!r}")
                header = obj
            elif kind == "step":
                steps.append(obj)
            elif kind == "summary":
                summary = obj
            else:
                raise ValueError(f"trace line {line_no} has unknown kind {kind!r}")
    if header is None:
        raise ValueError("trace has no header line")
    return {"header": header, "steps": steps, "summary": summary}
