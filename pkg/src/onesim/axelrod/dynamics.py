"""Interaction dynamics and the standalone reference runner.

The rng discipline here is the contract the full engine mirrors: the visit
order comes from a stream tagged (ENV, round, "visit_order"), each cell's
turn draws come from a stream tagged (cell agent id, round, "take_turn"),
and the initial grid fill comes from (ENV, 0, "init_grid"). Any execution —
kernel sweep, engine run, or a hand-written trace — that follows the same
tags produces the same grids.
"""
from __future__ import annotations

import numpy as np

from ..rngkit import DetStream, stream_seed
from .grid import CulturalGrid
from .metrics import MetricSeries, global_polarization, local_convergence

ENV_ID = "ENV"
TURN_NODE = "take_turn"
VISIT_TAG = "visit_order"
INIT_TAG = "init_grid"


def cell_agent_id(idx: int) -> str:
    return f"cell_{idx:04d}"


def visit_order(n_agents: int, seed: int, round_stamp: int) -> list[int]:
    """This round's visit order: a seeded shuffle of the cell indices."""
    stream = DetStream(stream_seed(seed, ENV_ID, round_stamp, VISIT_TAG))
    return stream.shuffle(list(range(n_agents)))


def turn_seed(seed: int, idx: int, round_stamp: int) -> int:
    return stream_seed(seed, cell_agent_id(idx), round_stamp, TURN_NODE)


def initial_grid(rows: int, cols: int, f: int, q: int, seed: int) -> CulturalGrid:
    stream = DetStream(stream_seed(seed, ENV_ID, 0, INIT_TAG))
    return CulturalGrid.random(rows, cols, f, q, stream)


def interact_step(grid: CulturalGrid, seed: int, round_stamp: int = 0) -> int:
    """One full sweep in this round's visit order; returns copies applied."""
    n = grid.n_agents
    order = np.asarray(visit_order(n, seed, round_stamp), dtype=np.int64)
    seeds = np.empty(n, dtype=np.uint64)
    for idx in range(n):
        seeds[idx] = turn_seed(seed, idx, round_stamp)
    from . import kernels
    return int(kernels.sweep(grid.cells, grid.rows, grid.cols, order, seeds))


def reference_run(rows: int, cols: int, f: int, q: int, rounds: int,
                  seed: int) -> tuple[MetricSeries, CulturalGrid]:
    """Direct-loop run: init, then one sweep per round, metrics after each.

    Row 0 of the series is the initial state; row r is the state after r
    completed rounds.
    """
    grid = initial_grid(rows, cols, f, q, seed)
    series = MetricSeries()
    series.append(0, local_convergence(grid), global_polarization(grid))
    for r in range(rounds):
        interact_step(grid, seed, round_stamp=r)
        series.append(r + 1, local_convergence(grid), global_polarization(grid))
    return series, grid
