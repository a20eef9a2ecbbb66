"""Command-log replay.

A run's command log is totally ordered, and every row carries the boundary
count at record time: the next round boundary to drain is always round
`boundary_drains`, whether the run was mid-round or parked at the time. So
a fresh run over the same scenario and seed can re-issue each steering
command from a round listener one round ahead of that boundary, and the
command takes hold at the identical point: queued envelopes drain at the
same boundary, profile edits apply at the same boundary, and a stop fails
the same gate. Rows with boundary zero predate the first round and are
applied before the run starts.

Interviews and profile reads are side-effect free and are skipped; pause
and resume only stretch wall time and are skipped too.
"""
from __future__ import annotations

from ..errors import ConfigurationError
from ..run import SimulationRun
from ..scenarios.base import ScenarioDef

REPLAYED_KINDS = ("broadcast", "set_profile", "stop")


def _apply(run: SimulationRun, row: dict) -> None:
    kind = row["kind"]
    args = row["args"]
    if kind == "broadcast":
        run.broadcast(args["payload"])
    elif kind == "set_profile":
        run.set_profile(args["agent_id"], args["attr"], args["value"])
    elif kind == "stop":
        run.stop()


def replay_commands(scenario: ScenarioDef, command_log: list[dict],
                    **run_kwargs) -> SimulationRun:
    """Build a fresh run of `scenario` and re-issue the steering commands
    from `command_log` at their recorded boundaries. Returns the finished
    run; callers compare its log, metrics, and snapshot against the
    original."""
    run = SimulationRun(scenario, **run_kwargs)

    upfront: list[dict] = []
    by_round: dict[int, list[dict]] = {}
    for row in sorted(command_log, key=lambda r: r["seq"]):
        if row["kind"] not in REPLAYED_KINDS:
            continue
        boundary = row["boundary"]
        if boundary == 0:
            if row["kind"] == "stop":
                raise ConfigurationError(
                    "cannot replay a stop recorded before the first round")
            upfront.append(row)
        else:
            by_round.setdefault(boundary - 1, []).append(row)

    for row in upfront:
        _apply(run, row)

    def reissue(report, _row) -> None:
        for row in by_round.get(report.round_stamp, ()):
            _apply(run, row)

    run.add_round_listener(reissue)
    run.run_sync()
    return run
