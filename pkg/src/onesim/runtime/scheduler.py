"""Round and tick drivers.

Round mode is a barrier loop: environment start events, cascade drain, one
completion per activated agent, environment round-end hook, then queued
control commands take effect at the boundary. Tick mode drops the barrier
and emits start events on a fixed wall-clock cadence while a pump task
drains continuously.
"""
from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass, field
from typing import Awaitable, Callable

from ..errors import ConfigurationError, StalledRoundError
from .bus import EventBus
from .envelope import ENV_SOURCE, KIND_TERMINATE, EventEnvelope
from .host import AgentHost

StartFn = Callable[[int], list[EventEnvelope]]
RoundEndFn = Callable[[int], dict | None]


@dataclass(frozen=True)
class SchedulerConfig:
    mode: str = "round"
    max_rounds: int = 1
    tick_interval_ms: int | None = None
    stall_timeout_s: float = 60.0

    def __post_init__(self) -> None:
        if self.mode not in ("round", "tick"):
            raise ConfigurationError("mode must be 'round' or 'tick', got %r" % (self.mode,))
        if self.max_rounds < 0:
            raise ConfigurationError("max_rounds must not be negative")
        if self.mode == "tick":
            if not self.tick_interval_ms or self.tick_interval_ms <= 0:
                raise ConfigurationError("tick mode needs a positive tick_interval_ms")
        elif self.tick_interval_ms is not None:
            raise ConfigurationError("tick_interval_ms is only valid in tick mode")


@dataclass(frozen=True)
class RoundReport:
    round_stamp: int
    deliveries: int
    activated: int
    wall_time_s: float
    end_seen: bool


@dataclass(frozen=True)
class TickReport:
    tick: int
    emitted: int
    behind_ms: float


class Scheduler:
    def __init__(self, host: AgentHost, bus: EventBus, config: SchedulerConfig,
                 start_events: StartFn,
                 on_round_end: RoundEndFn | None = None,
                 end_event: str | None = None):
        self.host = host
        self.bus = bus
        self.config = config
        self.start_events = start_events
        self.on_round_end = on_round_end
        self.end_event = end_event
        self.round = 0
        self.boundary_drains = 0
        self.end_seen = False
        self.completions_seen = 0
        self.dropped: list[str] = []
        self.reports: list[RoundReport] = []
        self.metrics_rows: list[dict] = []
        # Queued control mutations, applied only at round boundaries.
        self._boundary_cmds: list[Callable[[int], None]] = []
        self._round_listeners: list[Callable[[RoundReport, dict | None], None]] = []
        host.env_sink = self._env_sink

    def _env_sink(self, env: EventEnvelope) -> None:
        if env.kind == "completion":
            self.completions_seen += 1
        if self.end_event is not None and env.event_name == self.end_event:
            self.end_seen = True

    def queue_boundary(self, fn: Callable[[int], None]) -> None:
        """Register a control mutation to apply at the next round boundary;
        the callback receives the round about to run."""
        self._boundary_cmds.append(fn)

    def add_round_listener(self, fn: Callable[[RoundReport, dict | None], None]) -> None:
        self._round_listeners.append(fn)

    @property
    def done(self) -> bool:
        return self.end_seen or self.round >= self.config.max_rounds

    async def run_round(self) -> RoundReport:
        t0 = time.monotonic()
        r = self.round
        self.host.begin_round()
        before = self.host.deliveries
        cmds, self._boundary_cmds = self._boundary_cmds, []
        for cmd in cmds:
            cmd(r)
        self.boundary_drains = r + 1
        for env in self.start_events(r):
            self.bus.publish(env)
        try:
            await asyncio.wait_for(self.host.drain(), self.config.stall_timeout_s)
        except asyncio.TimeoutError:
            raise StalledRoundError(r, self.host.busy_agents()) from None
        self.host.emit_completions(r)
        await asyncio.wait_for(self.host.drain(), self.config.stall_timeout_s)
        row = self.on_round_end(r) if self.on_round_end else None
        if row is not None:
            self.metrics_rows.append(row)
        self.round = r + 1
        report = RoundReport(
            round_stamp=r,
            deliveries=self.host.deliveries - before,
            activated=len(self.host.activated),
            wall_time_s=time.monotonic() - t0,
            end_seen=self.end_seen)
        self.reports.append(report)
        for listener in self._round_listeners:
            listener(report, row)
        return report

    async def run(self, *, gate: Callable[[], Awaitable[bool]] | None = None) -> list[RoundReport]:
        """Run rounds until max_rounds or the end event. The optional gate is
        awaited before each round; returning False stops the loop early."""
        while not self.done:
            if gate is not None and not await gate():
                break
            await self.run_round()
        return self.reports

    async def run_ticks(self, *, gate: Callable[[], Awaitable[bool]] | None = None) -> list[TickReport]:
        """Barrier-free cadence: start events go out every interval whether or
        not earlier handlers finished; a pump task drains in the background."""
        interval = (self.config.tick_interval_ms or 0) / 1000.0
        ticks: list[TickReport] = []
        stop = asyncio.Event()

        async def pump() -> None:
            while not stop.is_set():
                if self.bus.has_pending:
                    await self.host.dispatch_wave(self.bus.take_wave(), activate=False)
                else:
                    await asyncio.sleep(interval / 20 if interval else 0.001)

        pump_task = asyncio.create_task(pump())
        try:
            deadline = time.monotonic()
            for tick in range(self.config.max_rounds):
                if self.end_seen or (gate is not None and not await gate()):
                    break
                drafts = self.start_events(tick)
                for env in drafts:
                    self.bus.publish(env)
                self.round = tick + 1
                behind = (time.monotonic() - deadline) * 1000.0
                ticks.append(TickReport(tick=tick, emitted=len(drafts), behind_ms=max(0.0, behind)))
                deadline += interval
                delay = deadline - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
            # Let the tail of the cascade finish before declaring the run over.
            settle = time.monotonic() + self.config.stall_timeout_s
            while (self.bus.has_pending or self.host.busy_agents()) and time.monotonic() < settle:
                await asyncio.sleep(0.002)
        finally:
            stop.set()
            await pump_task
        return ticks

    def terminate(self, reason: str = "requested"):
        """Close intake, log the terminate marker, seal the log. Event ids
        still queued at close time are recorded as dropped, never silently
        lost. Returns the sealed EventLog."""
        self.dropped = self.bus.close()
        final = EventEnvelope(
            event_name="TerminateEvent", source=ENV_SOURCE, targets=[],
            payload={"reason": reason}, round_stamp=self.round, kind=KIND_TERMINATE)
        self.bus.log_only(final)
        self.bus.log.seal(self.dropped)
        return self.bus.log
