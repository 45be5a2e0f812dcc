"""Live session service: one WebSocket per operator-driven agent.

The server owns all world math; the client only sends intended actions and
renders what comes back.  Per accepted action the server replies with
exactly one ``state`` message (pose, realized action, vision overlay,
per-goal path polylines) followed by exactly one ``estimate`` message
(desire probabilities, rationality, per-hypothesis consistency).  Sessions
are flushed to trace files on disconnect and on server shutdown.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import os
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from . import __version__
from .engine import RunParams, Session, StepRecord, write_trace
from .gridworld import GridMap, Pose, compute_visibility
from .pathing import modified_astar
from .planner import ACTIONS, PrecomputeTables, parse_action

PROTOCOL_VERSION = 1

_session_ids = itertools.count(1)


def _json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _pose_dict(pose: Pose) -> dict:
    return {"x": pose.x, "y": pose.y, "heading": pose.heading}


def _overlays(grid: GridMap, tables: PrecomputeTables, pose: Pose) -> dict:
    """Vision overlay and per-goal path polylines for the current pose."""
    fov = tables.params["fov_half_angle"]
    eps_astar = tables.params["eps_astar"]
    vis = compute_visibility(grid, pose, fov)
    visible = [
        [x, y]
        for y in range(grid.height)
        for x in range(grid.width)
        if vis.visible[y, x]
    ]
    paths = {}
    for goal, label in zip(grid.goals, grid.goal_labels):
        path = modified_astar(grid, (pose.x, pose.y), goal, vis, eps_astar)
        paths[str(label)] = [[x, y] for x, y in path.cells] if path is not None else []
    return {"visible": visible, "paths": paths}


def _init_payload(grid: GridMap, tables: PrecomputeTables, session: Session) -> dict:
    label_at = {cell: str(lbl) for cell, lbl in zip(grid.goals, grid.goal_labels)}
    rows = []
    for y in range(grid.height):
        rows.append(
            "".join(
                "#" if grid.occupied[y, x] else label_at.get((x, y), ".")
                for x in range(grid.width)
            )
        )
    payload = {
        "kind": "init",
        "protocol": PROTOCOL_VERSION,
        "map": {
            "width": grid.width,
            "height": grid.height,
            "rows": rows,
            "goals": [
                {"label": lbl, "x": gx, "y": gy}
                for (gx, gy), lbl in zip(grid.goals, grid.goal_labels)
            ],
        },
        "map_hash": tables.map_hash,
        "start": _pose_dict(session.start),
        "pose": _pose_dict(session.pose),
        "states": list(session.state_names),
        "actions": list(ACTIONS),
        "params": session.params.to_dict(),
        "step": len(session.history),
        "estimate": [float(v) for v in session.estimate],
    }
    payload.update(_overlays(grid, tables, session.pose))
    return payload


def _state_payload(grid, tables, session, record: StepRecord) -> dict:
    payload = {
        "kind": "state",
        "step": record.step,
        "pose": _pose_dict(record.pose_after),
        "intended": ACTIONS[record.intended],
        "realized": ACTIONS[record.realized],
    }
    payload.update(_overlays(grid, tables, record.pose_after))
    return payload


def _estimate_payload(session, record: StepRecord) -> dict:
    return {
        "kind": "estimate",
        "step": record.step,
        "probs": [float(v) for v in record.estimate],
        "phi": float(record.phi),
        "observation": [float(v) for v in record.observation],
        "consistent": [bool(b) for b in record.consistent],
    }


def build_app(
    grid: GridMap,
    tables: PrecomputeTables,
    params: RunParams,
    *,
    start: Pose,
    ui_dir=None,
    trace_dir=None,
) -> FastAPI:
    """Assemble the service: /session (WebSocket), /health, optional UI."""
    params.validate()
    grid.check_pose(start)

    live = {}  # session id -> (Session, trace path)

    def _flush(session_id):
        entry = live.pop(session_id, None)
        if entry is None:
            return
        session, trace_path = entry
        if trace_path is None or not session.history:
            return
        os.makedirs(os.path.dirname(trace_path), exist_ok=True)
        write_trace(trace_path, session)

    @asynccontextmanager
    async def lifespan(app):
        yield
        for session_id in list(live):
            _flush(session_id)

    app = FastAPI(title="gridintent", version=__version__, lifespan=lifespan)

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "version": __version__,
            "protocol": PROTOCOL_VERSION,
            "map_hash": tables.map_hash,
            "goals": grid.n_goals,
            "mode": params.mode,
            "sessions": len(live),
        }

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        session_id = next(_session_ids)
        session = Session(grid, tables, params, start)
        trace_path = None
        if trace_dir is not None:
            trace_path = os.path.join(
                trace_dir, f"session-{session_id:04d}-{int(time.time())}.trace.jsonl"
            )
        live[session_id] = (session, trace_path)
        try:
            await ws.send_text(_json(
                {"kind": "hello", "protocol": PROTOCOL_VERSION, "version": __version__}
            ))
            await ws.send_text(_json(_init_payload(grid, tables, session)))
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                    if not isinstance(message, dict):
                        raise ValueError("message must be an object")
                except (json.JSONDecodeError, ValueError) as exc:
                    await ws.send_text(_json({"kind": "error", "message": f"malformed message: {exc}"}))
                    continue
                kind = message.get("kind")
                if kind == "hello":
                    if message.get("protocol") != PROTOCOL_VERSION:
                        await ws.send_text(_json({
                            "kind": "error",
                            "message": (
                                f"protocol version mismatch: server speaks "
                                f"{PROTOCOL_VERSION}, client sent {message.get('protocol')!r}"
                            ),
                        }))
                        await ws.close(code=1002)
                        break
                elif kind == "action":
                    try:
                        action = parse_action(message.get("name"))
                    except ValueError as exc:
                        await ws.send_text(_json({"kind": "error", "message": str(exc)}))
                        continue
                    record = session.step(action)
                    await ws.send_text(_json(_state_payload(grid, tables, session, record)))
                    await ws.send_text(_json(_estimate_payload(session, record)))
                elif kind == "reset":
                    session.reset()
                    await ws.send_text(_json(_init_payload(grid, tables, session)))
                else:
                    await ws.send_text(_json({
                        "kind": "error",
                        "message": f"unknown message kind {kind!r}",
                    }))
        except (WebSocketDisconnect, asyncio.CancelledError):
            pass
        finally:
            _flush(session_id)

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
