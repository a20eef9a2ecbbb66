"""Cultural-grid scenario driven by the full engine.

Each grid cell is an agent. A round is one sweep: the environment starts a
token at the first cell of the round's visit order, and each cell takes its
turn then passes the token to the next. The turn logic here is written
against the environment's list-of-lists grid, independently of the array
kernels, but draws from the same per-cell streams, so an engine run and a
kernel run of the same seed must land on identical grids.
"""
from __future__ import annotations

import numpy as np

from ..agents.profile import AgentProfile
from ..axelrod import kernels
from ..axelrod.dynamics import cell_agent_id, visit_order
from ..environment import EnvState
from ..graph import load_graph, validate_structure
from ..resources import graph_asset
from ..runtime.envelope import ENV_SOURCE, KIND_START, EventEnvelope
from ..rngkit import DetStream, stream_seed
from .base import ScenarioDef, register


def _neighbors(idx: int, rows: int, cols: int) -> list[int]:
    r, c = divmod(idx, cols)
    nbs = []
    if r > 0:
        nbs.append(idx - cols)
    if r < rows - 1:
        nbs.append(idx + cols)
    if c > 0:
        nbs.append(idx - 1)
    if c < cols - 1:
        nbs.append(idx + 1)
    return nbs


def _take_turn_rule(ctx) -> dict:
    env = ctx.env
    rows = env.get("rows")
    cols = env.get("cols")
    f = env.get("f")
    run_seed = env.get("run_seed")
    grid = env.get("grid")
    n = rows * cols

    me = int(ctx.agent_id.rsplit("_", 1)[1])
    stream = ctx.stream
    nbs = _neighbors(me, rows, cols)
    copied = False
    if nbs:
        other = nbs[stream.randrange(len(nbs))]
        mine, theirs = grid[me], grid[other]
        same = sum(1 for k in range(f) if mine[k] == theirs[k])
        if 0 < same < f and stream.random() < same / f:
            diffs = [k for k in range(f) if mine[k] != theirs[k]]
            pick = diffs[stream.randrange(len(diffs))]
            mine[pick] = theirs[pick]
            env.set("grid", grid)
            copied = True

    turn = int(ctx.payload["turn_index"])
    nxt = turn + 1
    if nxt < n:
        order = visit_order(n, run_seed, ctx.round_stamp)
        return {
            "next_index": nxt,
            "copied": copied,
            "turn_index": nxt,
            "_emit": {"TurnPassEvent": True, "SweepDoneEvent": False},
            "_targets": {"TurnPassEvent": [cell_agent_id(order[nxt])]},
        }
    final = bool(env.get("final_round"))
    return {
        "next_index": nxt,
        "copied": copied,
        "turn_index": nxt,
        "_emit": {"TurnPassEvent": False, "SweepDoneEvent": final},
    }


def _chat(ctx, question: str) -> str:
    grid = ctx.env.get("grid") if ctx.env is not None else None
    me = int(ctx.agent_id.rsplit("_", 1)[1])
    culture = grid[me] if grid is not None else []
    return "Cell %d, culture %s." % (me, culture)


def _grid_array(env: EnvState) -> np.ndarray:
    return np.array(env.get("grid"), dtype=np.int32)


@register("axelrod")
def build(config: dict) -> ScenarioDef:
    rows = int(config.get("rows", 10))
    cols = int(config.get("cols", 10))
    f = int(config.get("f", 5))
    q = int(config.get("q", 5))
    seed = int(config.get("seed", 0))
    max_rounds = int(config.get("max_rounds", 100))
    graph = load_graph(graph_asset("axelrod"))
    validate_structure(graph)
    n = rows * cols

    # Same fill order as the kernel-route initializer: row-major cell, then
    # feature, one stream for the whole grid.
    init_stream = DetStream(stream_seed(seed, "ENV", 0, "init_grid"))
    grid = [[init_stream.randrange(q) for _ in range(f)] for _ in range(n)]

    profiles = [AgentProfile(cell_agent_id(i), "Cell", {"index": i})
                for i in range(n)]

    def start_events(env: EnvState, round_stamp: int) -> list[EventEnvelope]:
        env.set("final_round", round_stamp == max_rounds - 1)
        order = visit_order(n, seed, round_stamp)
        return [EventEnvelope(
            event_name="SweepStartEvent", source=ENV_SOURCE,
            targets=[cell_agent_id(order[0])], payload={"turn_index": 0},
            round_stamp=round_stamp, kind=KIND_START)]

    def on_run_start(env: EnvState) -> dict:
        cells = _grid_array(env)
        return {"round": 0,
                "lc": kernels.local_convergence(cells, rows, cols),
                "gp": kernels.component_count(cells, rows, cols) / n}

    def on_round_end(env: EnvState, round_stamp: int) -> dict:
        cells = _grid_array(env)
        return {"round": round_stamp + 1,
                "lc": kernels.local_convergence(cells, rows, cols),
                "gp": kernels.component_count(cells, rows, cols) / n}

    def collector(agent) -> dict:
        return {"agent_id": agent.agent_id,
                "index": agent.profile.get("index")}

    return ScenarioDef(
        name="axelrod", seed=seed, max_rounds=max_rounds,
        graph=graph, profiles=profiles,
        rules={"take_turn": _take_turn_rule},
        start_events=start_events,
        on_run_start=on_run_start,
        on_round_end=on_round_end,
        env_vars={"grid": grid, "rows": rows, "cols": cols, "f": f, "q": q,
                  "run_seed": seed, "final_round": False},
        end_event="SweepDoneEvent",
        chat_rule=_chat,
        collector=collector,
        config={"rows": rows, "cols": cols, "f": f, "q": q,
                "seed": seed, "max_rounds": max_rounds})
