"""Command-line entry point: precompute, replay, serve, inspect.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 artifact
mismatch.  Every flag can also be set through an environment variable with
the ``GRIDINTENT_`` prefix (e.g. ``GRIDINTENT_REPLAY_GAMMA``).
"""

from __future__ import annotations

import functools
import json
import os
import time

import click
from click.core import ParameterSource

from . import __version__
from .engine import (
    RunParams,
    load_scenario,
    precompute as run_precompute,
    read_trace,
    run_replay,
    write_trace,
)
from .gridworld import parse_map
from .planner import PrecomputeTables, TablesMismatchError

CONTEXT_SETTINGS = dict(auto_envvar_prefix="GRIDINTENT", help_option_names=["-h", "--help"])


class IOFailure(click.ClickException):
    exit_code = 3


class MismatchFailure(click.ClickException):
    exit_code = 4


def _translate_errors(fn):
    """Map domain exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TablesMismatchError as exc:
            raise MismatchFailure(str(exc)) from exc
        except OSError as exc:
            raise IOFailure(str(exc)) from exc
        except ValueError as exc:  # includes map/scenario parse errors
            raise click.UsageError(str(exc)) from exc

    return wrapper


# ---------- shared parameter flags ----------

_DEFAULTS = RunParams()

_PARAM_FLAGS = [
    ("--gamma", "gamma", float, "Discount factor of the value iteration."),
    ("--eta", "eta", float, "Convergence threshold: total absolute value change per sweep."),
    ("--eps-move", "eps_move", float, "Slip probability mass of the motion model."),
    ("--eps-reward", "eps_reward", float, "Base penalty of the orientation reward."),
    ("--eps-astar", "eps_astar", float, "Visibility discount of the path search."),
    ("--fov-half-angle", "fov_half_angle", float, "Half-angle of the vision cone, radians."),
    (
        "--reward-floor",
        "reward_floor",
        click.Choice(["eps-pi", "pi"]),
        "Reward for hidden or unreachable paths: base penalty plus pi, or exactly pi.",
    ),
    ("--alpha", "alpha", float, "Goal-state exit probability of the desire chain."),
    ("--gamma-hmm", "gamma_hmm", float, "Unknown-state self-loop probability."),
    ("--delta", "delta", float, "Irrational-state coupling probability."),
    ("--c-rational", "c_rational", float, "Unknown-state emission constant while rational."),
    ("--c-unknown", "c_unknown", float, "Unknown-state emission constant while irrational."),
    ("--phi-threshold", "phi_threshold", float, "Rationality threshold on the averaged observations."),
    ("--window", "window", int, "Observations averaged into the rationality score."),
    (
        "--filter",
        "filter_kind",
        click.Choice(["viterbi", "forward"]),
        "Trellis rule: max-product with backtrace, or sum-product.",
    ),
    ("--max-sweeps", "max_sweeps", int, "Defensive cap on value-iteration sweeps."),
]


def param_options(fn):
    for flag, name, ftype, help_text in reversed(_PARAM_FLAGS):
        fn = click.option(
            flag,
            name,
            type=ftype,
            default=getattr(_DEFAULTS, name),
            show_default=True,
            help=help_text,
        )(fn)
    return fn


def _split_params(ctx, kwargs):
    """Pop parameter flags from kwargs; return (all values, explicit-only)."""
    values, explicit = {}, {}
    for _, name, _, _ in _PARAM_FLAGS:
        values[name] = kwargs.pop(name)
        if ctx.get_parameter_source(name) in (
            ParameterSource.COMMANDLINE,
            ParameterSource.ENVIRONMENT,
        ):
            explicit[name] = values[name]
    return values, explicit


def _print_config(command: str, params: RunParams, extra: dict):
    config = {"command": command, "params": params.to_dict()}
    config.update(extra)
    click.echo(json.dumps(config, indent=2, sort_keys=True))


def _load_map(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_map(fh.read())


def _format_estimate(names, probs) -> str:
    return "  ".join(f"{n}={p:.4f}" for n, p in zip(names, probs))


@click.group(context_settings=CONTEXT_SETTINGS)
@click.version_option(version=__version__, prog_name="gridintent")
def main():
    """Validate grid-world agent actions against per-goal plans and
    estimate goal desires online."""


# ---------- precompute ----------


@main.command()
@click.option("--map", "map_path", required=True, type=click.Path(), help="ASCII map file.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output tables artifact.")
@param_options
@click.option("--print-config", is_flag=True, help="Print the resolved configuration and exit.")
@click.pass_context
@_translate_errors
def precompute(ctx, map_path, out_path, print_config, **kwargs):
    """Build the per-goal reward and value tables for a map."""
    values, _ = _split_params(ctx, kwargs)
    params = RunParams.from_dict(values)
    if print_config:
        _print_config("precompute", params, {"map": map_path, "out": out_path})
        return
    grid = _load_map(map_path)
    t0 = time.perf_counter()
    tables = run_precompute(grid, params)
    elapsed = time.perf_counter() - t0
    tables.save(out_path)
    for hyp, label in zip(tables.hypotheses, grid.goal_labels):
        click.echo(f"goal {label} at {hyp.goal_cell}: converged in {hyp.sweeps} sweeps")
    click.echo(
        f"wrote {out_path} ({os.path.getsize(out_path)} bytes) in {elapsed:.2f}s "
        f"[{grid.width}x{grid.height}, {grid.n_goals} goals, map {tables.map_hash[:15]}...]"
    )


# ---------- replay ----------


def _switch_steps(estimates) -> list:
    """Steps at which the most likely desire state changes."""
    switches = []
    prev = None
    for i, row in enumerate(estimates):
        top = max(range(len(row)), key=row.__getitem__)
        if prev is not None and top != prev:
            switches.append(i)
        prev = top
    return switches


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(), help="Scenario file.")
@click.option("--tables", "tables_path", required=True, type=click.Path(), help="Precomputed tables artifact.")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Trace output path [default: <scenario>.trace.jsonl].")
@click.option("--summary", is_flag=True, help="Print per-state peaks and desire switches.")
@param_options
@click.option("--print-config", is_flag=True, help="Print the resolved configuration and exit.")
@click.pass_context
@_translate_errors
def replay(ctx, scenario_path, tables_path, out_path, summary, print_config, **kwargs):
    """Execute a scripted scenario deterministically and write its trace."""
    values, explicit = _split_params(ctx, kwargs)
    scenario, grid = load_scenario(scenario_path)
    # Precedence: defaults < scenario params < explicit flags/environment.
    params = RunParams.from_dict(scenario.params).with_overrides(**explicit)
    if print_config:
        _print_config(
            "replay",
            params,
            {"scenario": scenario_path, "tables": tables_path, "out": out_path},
        )
        return
    tables = PrecomputeTables.load(tables_path, grid, params.table_params())
    session = run_replay(grid, tables, params, scenario)
    if out_path is None:
        base = os.path.basename(scenario_path)
        out_path = os.path.splitext(base)[0] + ".trace.jsonl"
    write_trace(out_path, session)

    names = session.state_names
    click.echo(f"replayed {len(session.history)} steps; trace written to {out_path}")
    click.echo("final estimate: " + _format_estimate(names, session.estimate))
    if summary:
        estimates = [list(r.estimate) for r in session.history]
        for i, name in enumerate(names):
            peak_step, peak = max(
                ((s + 1, est[i]) for s, est in enumerate(estimates)),
                key=lambda t: t[1],
                default=(0, 0.0),
            )
            click.echo(f"peak P({name}) = {peak:.4f} at step {peak_step}")
        switches = _switch_steps(estimates)
        if switches:
            click.echo("desire switches at steps: " + ", ".join(str(s + 1) for s in switches))
        else:
            click.echo("desire switches at steps: none")


# ---------- serve ----------


@main.command()
@click.option("--map", "map_path", required=True, type=click.Path(), help="ASCII map file.")
@click.option("--tables", "tables_path", required=True, type=click.Path(), help="Precomputed tables artifact.")
@click.option("--host", default="127.0.0.1", show_default=True, help="Bind address.")
@click.option("--port", default=8000, show_default=True, type=int, help="Bind port.")
@click.option("--start", "start_spec", default=None, help="Start pose as x,y,heading [default: first free cell].")
@click.option("--mode", type=click.Choice(["deterministic", "stochastic"]), default="deterministic", show_default=True, help="Action realization mode.")
@click.option("--seed", type=int, default=0, show_default=True, help="RNG seed for stochastic realization.")
@click.option("--ui-dir", type=click.Path(), default=None, help="Static UI bundle to serve at /.")
@click.option("--trace-dir", type=click.Path(), default=None, help="Directory for flushed session traces.")
@param_options
@click.option("--print-config", is_flag=True, help="Print the resolved configuration and exit.")
@click.pass_context
@_translate_errors
def serve(ctx, map_path, tables_path, host, port, start_spec, mode, seed, ui_dir, trace_dir, print_config, **kwargs):
    """Serve live sessions over the session protocol plus the web UI."""
    values, _ = _split_params(ctx, kwargs)
    params = RunParams.from_dict(values).with_overrides(mode=mode, seed=seed)
    if print_config:
        _print_config(
            "serve",
            params,
            {
                "map": map_path,
                "tables": tables_path,
                "host": host,
                "port": port,
                "start": start_spec,
                "ui_dir": ui_dir,
                "trace_dir": trace_dir,
            },
        )
        return
    grid = _load_map(map_path)
    tables = PrecomputeTables.load(tables_path, grid, params.table_params())
    start = _parse_start(grid, start_spec)

    from .service import build_app

    import uvicorn

    app = build_app(grid, tables, params, start=start, ui_dir=ui_dir, trace_dir=trace_dir)
    click.echo(f"serving map {tables.map_hash[:15]}... on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def _parse_start(grid, spec):
    from .gridworld import Pose

    if spec is None:
        for y in range(grid.height):
            for x in range(grid.width):
                if grid.is_free(x, y) and (x, y) not in grid.goals:
                    return Pose(x, y, 0)
        raise ValueError("map has no free non-goal cell to start on")
    parts = [p.strip() for p in str(spec).split(",")]
    if len(parts) != 3:
        raise ValueError("start must be given as x,y,heading")
    return grid.check_pose(Pose(int(parts[0]), int(parts[1]), int(parts[2])))


# ---------- inspect ----------


@main.command()
@click.argument("trace", type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="Emit the digest as JSON.")
@_translate_errors
def inspect(trace, as_json):
    """Summarize a recorded trace: steps, peaks, desire switches."""
    data = read_trace(trace)
    header = data["header"]
    steps = data["steps"]
    names = header["states"]
    estimates = [s["estimate"] for s in steps]
    digest = {
        "map_hash": header["map_hash"],
        "mode": header["mode"],
        "seed": header["seed"],
        "steps": len(steps),
        "final_estimate": estimates[-1] if estimates else None,
        "sequence": (data["summary"] or {}).get("sequence"),
        "peaks": {
            name: {
                "probability": max((e[i] for e in estimates), default=0.0),
                "step": max(range(len(estimates)), key=lambda s: estimates[s][i], default=-1) + 1,
            }
            for i, name in enumerate(names)
        },
        "switches": [s + 1 for s in _switch_steps(estimates)],
    }
    if as_json:
        click.echo(json.dumps(digest, indent=2, sort_keys=True))
        return
    click.echo(f"trace: {trace}")
    click.echo(f"map hash: {digest['map_hash']}")
    click.echo(f"mode: {digest['mode']}  seed: {digest['seed']}  steps: {digest['steps']}")
    if estimates:
        click.echo("final estimate: " + _format_estimate(names, digest["final_estimate"]))
        for name in names:
            peak = digest["peaks"][name]
            click.echo(f"peak P({name}) = {peak['probability']:.4f} at step {peak['step']}")
        if digest["switches"]:
            click.echo("desire switches at steps: " + ", ".join(map(str, digest["switches"])))
        else:
            click.echo("desire switches at steps: none")
    if digest["sequence"]:
        click.echo("most likely sequence: " + " ".join(digest["sequence"]))


if __name__ == "__main__":
    main()
