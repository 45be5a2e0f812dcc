import json
import math

import numpy as np
import pytest

from gridintent import (
    RunParams,
    Scenario,
    Session,
    load_scenario,
    observe,
    precompute,
    run_replay,
)
from gridintent.engine import read_trace, trace_bytes, write_trace
from gridintent.gridworld import Pose, parse_map
from gridintent.planner import DOWN, STAY, UP, TablesMismatchError, optimal_action

TWO_GOAL_MAP = "....\n.1.2\n....\n"


@pytest.fixture(scope="module")
def arena():
    grid = parse_map(TWO_GOAL_MAP)
    params = RunParams()
    return grid, precompute(grid, params), params


# ---------- run parameters ----------


def test_params_round_trip_and_overrides():
    params = RunParams()
    assert RunParams.from_dict(params.to_dict()) == params
    assert params.with_overrides(gamma=0.9).gamma == 0.9
    # overrides leave the base untouched
    assert params.gamma == 0.95


def test_params_reject_unknown_keys_and_bad_values():
    with pytest.raises(ValueError, match="unknown parameter"):
        RunParams.from_dict({"gammma": 0.9})
    for bad in (
        dict(gamma=1.0),
        dict(eta=0.0),
        dict(eps_move=0.5),
        dict(fov_half_angle=0.0),
        dict(fov_half_angle=math.pi + 0.1),
        dict(reward_floor="none"),
        dict(mode="sloppy"),
        dict(filter_kind="smoothing"),
        dict(window=0),
        dict(gamma_hmm=0.99, delta=0.1),
    ):
        with pytest.raises(ValueError):
            RunParams().with_overrides(**bad)


# ---------- scenarios ----------


def test_scenario_field_validation():
    base = {
        "map": "m.map",
        "start": {"x": 0, "y": 0, "heading": 0},
        "actions": ["Up"],
    }
    parsed = Scenario.from_dict(base)
    assert parsed.actions == [UP]
    assert parsed.seed == 0

    with pytest.raises(ValueError, match="missing"):
        Scenario.from_dict({"map": "m.map", "actions": []})
    with pytest.raises(ValueError, match="unknown"):
        Scenario.from_dict(dict(base, color="red"))
    with pytest.raises(ValueError):
        Scenario.from_dict(dict(base, params=[1, 2]))
    with pytest.raises(ValueError):
        Scenario.from_dict(dict(base, actions=["North"]))


def test_scenario_save_load_round_trip(tmp_path):
    (tmp_path / "maps").mkdir()
    (tmp_path / "maps" / "tiny.map").write_text("..1\n...\n")
    scenario = Scenario(
        map="maps/tiny.map",
        start=Pose(0, 1, 2),
        actions=[UP, STAY, DOWN],
        params={"gamma": 0.9},
        seed=7,
    )
    path = tmp_path / "episode.json"
    scenario.save(path)

    loaded, grid = load_scenario(path)
    assert loaded.start == scenario.start
    assert loaded.actions == scenario.actions
    assert loaded.params == {"gamma": 0.9}
    assert loaded.seed == 7
    assert grid.width == 3 and grid.goals == ((2, 0),)


def test_scenario_loading_errors(tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    with pytest.raises(ValueError, match="not valid JSON"):
        load_scenario(bad_json)

    (tmp_path / "wall.map").write_text("#.1\n")
    on_wall = tmp_path / "wall.json"
    on_wall.write_text(
        json.dumps(
            {
                "map": "wall.map",
                "start": {"x": 0, "y": 0, "heading": 0},
                "actions": [],
            }
        )
    )
    with pytest.raises(ValueError):
        load_scenario(on_wall)


# ---------- session construction ----------


def test_session_rejects_foreign_tables(arena):
    grid, tables, params = arena
    other = parse_map("...\n1.2\n")
    with pytest.raises(TablesMismatchError):
        Session(other, tables, params, Pose(0, 0, 0))
    with pytest.raises(TablesMismatchError) as err:
        Session(grid, tables, params.with_overrides(gamma=0.9), Pose(0, 0, 0))
    assert "gamma" in str(err.value)


def test_session_rejects_bad_start(arena):
    grid, tables, params = arena
    with pytest.raises(ValueError):
        Session(grid, tables, params, Pose(99, 0, 0))


# ---------- deterministic stepping ----------


def test_deterministic_step_moves_and_records(arena):
    grid, tables, params = arena
    session = Session(grid, tables, params, Pose(0, 0, 0))
    record = session.step("Down")
    assert record.step == 1
    assert record.intended == DOWN
    assert record.realized == DOWN  # argmax of the slip row is the intent
    assert record.pose_before == Pose(0, 0, 0)
    assert record.pose_after == Pose(0, 1, 0)
    assert session.pose == Pose(0, 1, 0)
    assert record.estimate.shape == (4,)
    assert record.estimate.sum() == pytest.approx(1.0, abs=1e-9)


def test_deterministic_blocked_intent_stays_put(arena):
    grid, tables, params = arena
    session = Session(grid, tables, params, Pose(0, 0, 0))
    record = session.step("Up")  # top edge blocks the move
    assert record.intended == UP
    assert record.realized == STAY
    assert record.pose_after == record.pose_before
    # the observation still scores the *intended* action at the pre-move pose
    want = observe(grid, tables, Pose(0, 0, 0), UP).values
    assert np.allclose(record.observation, want, atol=0.0)


def test_observation_always_uses_pre_move_pose(arena):
    grid, tables, params = arena
    session = Session(grid, tables, params, Pose(3, 0, 0))
    record = session.step("Down")
    want = observe(grid, tables, Pose(3, 0, 0), DOWN).values
    assert np.allclose(record.observation, want, atol=0.0)


def test_estimates_stay_normalized_over_a_run(arena, rng):
    grid, tables, params = arena
    session = Session(grid, tables, params, Pose(0, 2, 0))
    for _ in range(40):
        record = session.step(int(rng.integers(0, 7)))
        assert record.estimate.sum() == pytest.approx(1.0, abs=1e-9)
        assert (record.estimate >= 0.0).all()


def test_optimal_intent_is_always_consistent(arena, rng):
    grid, tables, params = arena
    session = Session(grid, tables, params, Pose(0, 0, 0))
    for _ in range(25):
        x = int(rng.integers(0, grid.width))
        y = int(rng.integers(0, grid.height))
        h = int(rng.integers(0, 8))
        if grid.occupied[y, x]:
            continue
        session.pose = Pose(x, y, h)
        hyp_index = int(rng.integers(0, grid.n_goals))
        hyp = tables.hypotheses[hyp_index]
        best = optimal_action(grid, hyp.rewards, hyp.values, session.pose)
        record = session.step(best)
        assert record.consistent[hyp_index]


# ---------- stochastic stepping ----------


def test_stochastic_runs_reproduce_with_the_same_seed(arena):
    grid, tables, params = arena
    actions = ["Right", "Right", "Down", "L", "Up", "Stay", "Left"] * 3
    runs = []
    for _ in range(2):
        session = Session(
            grid, tables, params.with_overrides(mode="stochastic", seed=42), Pose(0, 0, 0)
        )
        for a in actions:
            session.step(a)
        runs.append(session)
    first, second = runs
    assert [r.realized for r in first.history] == [r.realized for r in second.history]
    assert np.array_equal(first.estimate, second.estimate)

    other = Session(
        grid, tables, params.with_overrides(mode="stochastic", seed=43), Pose(0, 0, 0)
    )
    for a in actions:
        other.step(a)
    assert [r.realized for r in first.history] != [r.realized for r in other.history]


def test_stochastic_observation_scores_the_realized_action(arena):
    grid, tables, params = arena
    session = Session(
        grid, tables, params.with_overrides(mode="stochastic", seed=5), Pose(0, 2, 0)
    )
    saw_slip = False
    for _ in range(60):
        before = session.pose
        record = session.step("Right")
        want = observe(grid, tables, before, record.realized).values
        assert np.allclose(record.observation, want, atol=0.0)
        if record.realized != record.intended:
            saw_slip = True
        if session.pose.x == grid.width - 1:
            session.pose = Pose(0, 2, session.pose.heading)
    assert saw_slip, "sixty slip draws at 20% should have produced one"


def test_reset_restores_pose_filter_and_rng(arena):
    grid, tables, params = arena
    session = Session(
        grid, tables, params.with_overrides(mode="stochastic", seed=9), Pose(0, 0, 0)
    )
    actions = ["Down", "Right", "Right", "R", "Up"]
    for a in actions:
        session.step(a)
    first = [r.realized for r in session.history]
    final = session.estimate.copy()

    session.reset()
    assert session.pose == Pose(0, 0, 0)
    assert session.history == []
    assert np.array_equal(session.estimate, [0, 0, 1, 0])

    for a in actions:
        session.step(a)
    assert [r.realized for r in session.history] == first
    assert np.array_equal(session.estimate, final)


# ---------- replay and traces ----------


def test_replay_empty_scenario_keeps_the_prior(arena, tmp_path):
    grid, tables, params = arena
    scenario = Scenario(map="unused", start=Pose(2, 2, 4), actions=[])
    session = run_replay(grid, tables, params, scenario)
    assert session.history == []
    assert np.array_equal(session.estimate, [0, 0, 1, 0])
    trace = tmp_path / "empty.trace"
    write_trace(trace, session)
    parsed = read_trace(trace)
    assert parsed["steps"] == []
    assert parsed["summary"]["steps"] == 0


def test_replay_honors_the_scenario_seed(arena):
    grid, tables, params = arena
    scenario = Scenario(map="unused", start=Pose(0, 0, 0), actions=[DOWN], seed=31)
    session = run_replay(grid, tables, params.with_overrides(seed=99), scenario)
    assert session.header_dict()["seed"] == 31


def test_trace_round_trip_and_reproducibility(arena, tmp_path):
    grid, tables, params = arena
    scenario = Scenario(
        map="unused",
        start=Pose(0, 2, 0),
        actions=[UP, "Right", "Right", "R", "Down", "Stay"],
    )
    session = run_replay(grid, tables, params, scenario)
    again = run_replay(grid, tables, params, scenario)
    assert trace_bytes(session) == trace_bytes(again)

    path = tmp_path / "run.trace"
    write_trace(path, session)
    assert path.read_bytes() == trace_bytes(session)

    parsed = read_trace(path)
    assert parsed["header"]["map_hash"] == grid.content_hash()
    assert parsed["header"]["states"] == ["G1", "G2", "G?", "Gx"]
    assert len(parsed["steps"]) == len(scenario.actions)
    for raw, record in zip(parsed["steps"], session.history):
        assert raw["intended"] == ["Up", "Down", "Left", "Right", "R", "L", "Stay"][record.intended]
        assert raw["estimate"] == [float(v) for v in record.estimate]
    assert parsed["summary"]["final_estimate"] == [float(v) for v in session.estimate]
    assert parsed["summary"]["sequence"] == session.sequence_names()


def test_read_trace_rejects_malformed_files(tmp_path):
    no_header = tmp_path / "a.trace"
    no_header.write_text(json.dumps({"kind": "step"}) + "\n")
    with pytest.raises(ValueError, match="header"):
        read_trace(no_header)

    bad_kind = tmp_path / "b.trace"
    bad_kind.write_text(json.dumps({"kind": "header", "format": "gridintent-trace"}) + "\n" + json.dumps({"kind": "wat"}) + "\n")
    with pytest.raises(ValueError, match="unknown kind"):
        read_trace(bad_kind)

    bad_json = tmp_path / "c.trace"
    bad_json.write_text("{nope\n")
    with pytest.raises(ValueError, match="not valid JSON"):
        read_trace(bad_json)

    wrong_format = tmp_path / "d.trace"
    wrong_format.write_text(json.dumps({"kind": "header", "format": "other"}) + "\n")
    with pytest.raises(ValueError, match="not a trace file"):
        read_trace(wrong_format)


def test_shipped_scenario_replays_to_an_irrational_verdict(warehouse, warehouse_tables, default_params):
    scenario, grid = warehouse
    session = run_replay(grid, warehouse_tables, default_params, scenario)
    assert len(session.history) == 31
    names = session.state_names
    assert session.estimate[names.index("Gx")] > 0.9
