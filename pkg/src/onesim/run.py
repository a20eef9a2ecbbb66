"""Single-process simulation runs.

SimulationRun assembles a scenario into live machinery (bus, host, agents,
scheduler), owns the control state machine (created, running, paused,
stopped, finished), and records every control command in an ordered log so
a deterministic run can be replayed command for command.

Control mutations (broadcast, profile edits) queue at round boundaries:
each takes effect just before the next round's start events, which keeps
replays exact and keeps the exactly-once delivery contract intact.
"""
from __future__ import annotations

import asyncio
import csv
import io
import json
import threading
from pathlib import Path
from typing import Any, Callable

from .agents.agent import Directory, GeneralAgent, HandlerBinding
from .agents.memory import MemoryConfig
from .agents.planning import PlanningStrategy, load_strategy
from .environment import EnvProxy, EnvState
from .errors import (
    IllegalTransitionError,
    PartialCollectionError,
    RunNotActiveError,
    UnknownAgentError,
)
from .models.base import DecisionBackend
from .models.rules import RuleBackend
from .runtime.bus import EventBus
from .runtime.envelope import BROADCAST, ENV_SOURCE, KIND_BROADCAST, EventEnvelope
from .runtime.eventlog import EventLog, audit_round_barrier
from .runtime.host import AgentHost
from .runtime.scheduler import RoundReport, Scheduler, SchedulerConfig
from .scenarios.base import ScenarioDef

_TRANSITIONS = {
    "created": {"running"},
    "running": {"paused", "stopped", "finished"},
    "paused": {"running", "stopped"},
    "stopped": set(),
    "finished": set(),
}


def metrics_csv(rows: list[dict]) -> str:
    """Render metrics rows as CSV text, columns in first-seen order. The
    live metrics endpoint and the artifact export both use this, so a
    chart fed from the stream can be checked against the file."""
    headers: list[str] = []
    for row in rows:
        for key in row:
            if key not in headers:
                headers.append(key)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=headers, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


class SimulationRun:
    def __init__(self, scenario: ScenarioDef, *,
                 log_path: str | Path | None = None,
                 backend: DecisionBackend | None = None,
                 handler_kind: str = "rule",
                 planning: PlanningStrategy | str = "COT",
                 mode: str = "round",
                 tick_interval_ms: int | None = None,
                 stall_timeout_s: float = 60.0,
                 concurrency: int = 16,
                 memory_config: MemoryConfig | None = None):
        self.scenario = scenario
        self.state = "created"
        self._state_lock = threading.Lock()
        self._resume_gate = asyncio.Event()
        self._resume_gate.set()

        self.log = EventLog(path=log_path)
        self.bus = EventBus(log=self.log)
        self.env = EnvState(scenario.env_vars)
        self.env.n_agents = len(scenario.profiles)

        self.directory = Directory()
        for profile in scenario.profiles:
            self.directory.add_profile(profile)
        if scenario.relations is not None:
            for edge in scenario.relations.edges:
                self.directory.link(edge["src"], edge["dst"],
                                    edge["name"], edge["directed"])

        if backend is None:
            backend = RuleBackend(scenario.rules, chat_rule=scenario.chat_rule)
        self.backend = backend

        if handler_kind == "rule":
            bindings = {nid: HandlerBinding(nid, "rule", rule_name=nid)
                        for nid in scenario.rules}
        else:
            strategy = planning if isinstance(planning, PlanningStrategy) \
                else load_strategy(planning)
            bound_nodes = {nid for nid, node in scenario.graph.nodes.items()
                           if node.agent_type}
            bindings = {nid: HandlerBinding(nid, "model-backed", planning=strategy)
                        for nid in bound_nodes}

        self.agents: dict[str, GeneralAgent] = {}
        self.host = AgentHost(self.bus, concurrency=concurrency)
        for profile in scenario.profiles:
            agent = GeneralAgent(
                profile, scenario.graph, bindings, backend,
                seed=scenario.seed, directory=self.directory,
                env=EnvProxy(self.env),
                memory_config=memory_config,
                collector=scenario.collector,
                on_profile_change=self._log_profile_change)
            self.agents[agent.agent_id] = agent
            self.host.add_agent(agent)

        config = SchedulerConfig(
            mode=mode, max_rounds=scenario.max_rounds,
            tick_interval_ms=tick_interval_ms,
            stall_timeout_s=stall_timeout_s)
        self.scheduler = Scheduler(
            self.host, self.bus, config,
            start_events=lambda r: scenario.start_events(self.env, r),
            on_round_end=(
                (lambda r: scenario.on_round_end(self.env, r))
                if scenario.on_round_end else None),
            end_event=scenario.end_event)
        self.scheduler.add_round_listener(self._after_round)

        self.command_log: list[dict] = []
        self._command_seq = 0
        self._round_callbacks: list[Callable[[RoundReport, dict | None], None]] = []

    # --- bookkeeping ---------------------------------------------------------

    def _log_profile_change(self, agent_id: str, attr: str, value: Any) -> None:
        self.bus.log_only(EventEnvelope(
            event_name="ProfileUpdateEvent", source=ENV_SOURCE, targets=[],
            payload={"agent_id": agent_id, "attr": attr, "value": value},
            round_stamp=self.scheduler.round))

    def _after_round(self, report: RoundReport, row: dict | None) -> None:
        self.env.round = report.round_stamp + 1
        for cb in self._round_callbacks:
            cb(report, row)

    def add_round_listener(
            self, cb: Callable[[RoundReport, dict | None], None]) -> None:
        self._round_callbacks.append(cb)

    def record_command(self, kind: str, args: dict) -> dict:
        # "boundary" pins where the command takes hold: the next boundary
        # to drain is always round boundary_drains, whether the run is
        # mid-round or parked, so a replay can re-issue the command ahead
        # of exactly that boundary.
        self._command_seq += 1
        row = {"seq": self._command_seq, "kind": kind, "args": args,
               "round": self.scheduler.round,
               "boundary": self.scheduler.boundary_drains,
               "state": self.state}
        self.command_log.append(row)
        return row

    @property
    def metrics_rows(self) -> list[dict]:
        return self.scheduler.metrics_rows

    # --- state machine -------------------------------------------------------

    def _transition(self, new_state: str) -> str:
        with self._state_lock:
            if new_state not in _TRANSITIONS[self.state]:
                raise IllegalTransitionError(self.state, new_state)
            self.state = new_state
            return self.state

    def pause(self) -> str:
        self._transition("paused")
        self._resume_gate.clear()
        self.record_command("pause", {})
        return self.state

    def resume(self) -> str:
        self._transition("running")
        self._resume_gate.set()
        self.record_command("resume", {})
        return self.state

    def stop(self) -> str:
        self._transition("stopped")
        self._resume_gate.set()
        self.record_command("stop", {})
        return self.state

    async def _gate(self) -> bool:
        while True:
            if self.state == "stopped":
                return False
            if self.state == "running":
                return True
            await self._resume_gate.wait()

    # --- running -------------------------------------------------------------

    async def run(self) -> list[RoundReport]:
        self._transition("running")
        self.record_command("start", {"scenario": self.scenario.name,
                                      "seed": self.scenario.seed})
        if self.scenario.on_run_start is not None:
            row = self.scenario.on_run_start(self.env)
            if row is not None:
                self.scheduler.metrics_rows.append(row)
        try:
            reports = await self.scheduler.run(gate=self._gate)
        finally:
            reason = "stopped" if self.state == "stopped" else "completed"
            self.scheduler.terminate(reason)
        if self.state != "stopped":
            self._transition("finished")
        return reports

    def run_sync(self) -> list[RoundReport]:
        return asyncio.run(self.run())

    # --- control operations --------------------------------------------------

    def broadcast(self, payload: dict) -> int:
        if self.state != "running":
            raise RunNotActiveError(
                "broadcast requires a running run, state is %s" % self.state)
        self.record_command("broadcast", {"payload": payload})

        def publish(round_stamp: int) -> None:
            self.bus.publish(EventEnvelope(
                event_name="AnnouncementEvent", source=ENV_SOURCE,
                targets=[BROADCAST], payload=dict(payload),
                round_stamp=round_stamp, kind=KIND_BROADCAST))

        self.scheduler.queue_boundary(publish)
        return len(self.agents)

    async def interview(self, agent_id: str, question: str) -> str:
        self.record_command("interview", {"agent_id": agent_id,
                                          "question": question})
        return await self.host.interview(agent_id, question,
                                         self.scheduler.round)

    def interview_sync(self, agent_id: str, question: str) -> str:
        return asyncio.run(self.interview(agent_id, question))

    def collect(self) -> list[tuple[str, dict]]:
        """Read every live agent's collection payload and file it with the
        environment. Never mutates agent state."""
        if self.state in ("created",):
            raise RunNotActiveError("collect requires a started run")
        rows = self.host.collect_direct()
        seen = {agent_id for agent_id, _ in rows}
        missing = [aid for aid in self.agents if aid not in seen]
        if missing:
            raise PartialCollectionError(sorted(missing), rows)
        for agent_id, payload in rows:
            self.env.add_collected(agent_id, payload, self.scheduler.round)
        return rows

    def get_profile(self, agent_id: str) -> dict:
        if agent_id not in self.agents:
            raise UnknownAgentError(agent_id)
        return self.agents[agent_id].profile.to_dict()

    def set_profile(self, agent_id: str, attr: str, value: Any,
                    visibility: str | None = None) -> dict:
        if agent_id not in self.agents:
            raise UnknownAgentError(agent_id)
        self.record_command("set_profile", {
            "agent_id": agent_id, "attr": attr, "value": value})
        agent = self.agents[agent_id]
        if self.state in ("running", "paused"):
            # Paused runs queue too: the edit lands when the simulation
            # moves again, at a reproducible boundary rather than at some
            # arbitrary point inside a draining round.
            self.scheduler.queue_boundary(
                lambda _r: agent.update_profile(attr, value, visibility))
            return {"applied": "next-round"}
        agent.update_profile(attr, value, visibility)
        return {"applied": "immediate"}

    def snapshot(self) -> dict:
        return self.env.snapshot()

    # --- artifacts -----------------------------------------------------------

    def audit(self) -> list[str]:
        """Round-barrier audit over this run's log, in publish order."""
        docs = [json.loads(line) for line in self.log.lines()]
        return audit_round_barrier(docs)

    def export_artifacts(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths: dict[str, Path] = {}

        events = out / "events.ndjson"
        events.write_text("".join(line + "\n" for line in self.log.sorted_lines()),
                          encoding="utf-8")
        paths["events"] = events

        if self.metrics_rows:
            metrics = out / "metrics.csv"
            metrics.write_text(metrics_csv(self.metrics_rows),
                               encoding="utf-8")
            paths["metrics"] = metrics

        snapshot = out / "snapshot.json"
        snapshot.write_text(
            json.dumps(self.snapshot(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        paths["snapshot"] = snapshot

        commands = out / "command_log.json"
        commands.write_text(
            json.dumps(self.command_log, indent=2) + "\n", encoding="utf-8")
        paths["commands"] = commands
        return paths
