"""Wave-based delivery engine.

The host repeatedly takes the bus's pending wave, expands broadcast targets,
groups deliveries by receiving agent (per-agent FIFO), and runs one task per
agent with bounded cross-agent concurrency. A round's cascade is drained by
alternating waves until nothing is pending and no handler is in flight.

Delivery order inside a wave is the bus's stable (round, source, seq) order,
which makes each agent's inbox sequence — and therefore its emission order
and seq stamps — independent of task interleaving. That is the property the
byte-identical-log guarantee rests on.
"""
from __future__ import annotations

import asyncio
from typing import Callable, Protocol

from ..errors import UnknownAgentError
from .bus import EventBus
from .envelope import (
    ACTIVATING_KINDS,
    BROADCAST,
    ENV_SOURCE,
    KIND_CHAT,
    EventEnvelope,
)


class HostedAgent(Protocol):
    agent_id: str

    def subscribed_names(self) -> set[str]: ...

    async def handle(self, env: EventEnvelope) -> list[EventEnvelope]: ...

    async def answer_chat(self, question: str) -> str: ...

    def collect_payload(self) -> dict: ...


class AgentHost:
    def __init__(self, bus: EventBus,
                 env_sink: Callable[[EventEnvelope], None] | None = None,
                 concurrency: int = 16,
                 remote_sink: Callable[[EventEnvelope, str], None] | None = None):
        self.bus = bus
        self.env_sink = env_sink or (lambda env: None)
        # When set, targets this host does not know are handed over instead
        # of being an error; a worker node wires this to its router.
        self.remote_sink = remote_sink
        self.agents: dict[str, HostedAgent] = {}
        self.activated: set[str] = set()
        self._sem = asyncio.Semaphore(concurrency)
        self._in_flight: dict[str, int] = {}
        # Agents whose share of the current wave has not finished; survives
        # cancellation so a stalled round can still name its laggards.
        self._unfinished: set[str] = set()
        self.deliveries = 0

    def add_agent(self, agent: HostedAgent) -> None:
        self.agents[agent.agent_id] = agent
        self.bus.register_agent(agent.agent_id)
        self.bus.subscribe(agent.agent_id, agent.subscribed_names())

    # --- routing ------------------------------------------------------------

    def expand_targets(self, env: EventEnvelope) -> list[str]:
        """Broadcast expansion happens here, at routing time, so the
        recipient set is exactly the agents registered when the wave ships."""
        out: list[str] = []
        seen = set()
        for t in env.targets:
            if t == BROADCAST:
                for aid in sorted(self.agents):
                    if aid not in seen:
                        seen.add(aid)
                        out.append(aid)
            elif t not in seen:
                seen.add(t)
                out.append(t)
        return out

    # --- wave dispatch ------------------------------------------------------

    async def dispatch_wave(self, wave: list[EventEnvelope], *, activate: bool = True) -> int:
        """Deliver one wave; returns the number of deliveries made."""
        by_agent: dict[str, list[EventEnvelope]] = {}
        order: list[str] = []
        count = 0
        for env in wave:
            for target in self.expand_targets(env):
                if target == ENV_SOURCE:
                    self.bus.ledger.record(env, ENV_SOURCE)
                    self.env_sink(env)
                    count += 1
                    continue
                if target not in self.agents:
                    if self.remote_sink is not None:
                        self.remote_sink(env, target)
                        continue
                    raise UnknownAgentError(target)
                if env.kind in ("domain", "start") and \
                        not self.bus.is_subscribed(target, env.event_name):
                    continue
                if target not in by_agent:
                    by_agent[target] = []
                    order.append(target)
                by_agent[target].append(env)

        async def run_agent(aid: str) -> int:
            agent = self.agents[aid]
            delivered = 0
            self._in_flight[aid] = self._in_flight.get(aid, 0) + 1
            try:
                for env in by_agent[aid]:
                    async with self._sem:
                        self.bus.ledger.record(
                            env, aid, getattr(env, "arrival_path", "local"))
                        delivered += 1
                        if activate and env.kind in ACTIVATING_KINDS:
                            self.activated.add(aid)
                        drafts = await agent.handle(env)
                    for draft in drafts:
                        self.bus.publish(draft)
            finally:
                self._in_flight[aid] -= 1
                if not self._in_flight[aid]:
                    del self._in_flight[aid]
            self._unfinished.discard(aid)
            return delivered

        self._unfinished.update(order)
        results = await asyncio.gather(*(run_agent(aid) for aid in order))
        count += sum(results)
        self.deliveries += count
        return count

    async def drain(self) -> int:
        """Dispatch waves until the cascade quiesces; returns deliveries."""
        total = 0
        while self.bus.has_pending:
            total += await self.dispatch_wave(self.bus.take_wave())
        return total

    def busy_agents(self) -> list[str]:
        busy = set(self._in_flight) | set(self._unfinished)
        for env in getattr(self.bus, "_pending", []):
            for t in env.targets:
                if t not in (ENV_SOURCE, BROADCAST):
                    busy.add(t)
        return sorted(busy)

    # --- round support ------------------------------------------------------

    def begin_round(self) -> None:
        self.activated = set()
        self._unfinished = set()

    def emit_completions(self, round_stamp: int) -> int:
        """One completion envelope per agent activated this round."""
        for aid in sorted(self.activated):
            self.bus.publish(EventEnvelope(
                event_name="CompletionEvent", source=aid, targets=[ENV_SOURCE],
                payload={}, round_stamp=round_stamp, kind="completion"))
        return len(self.activated)

    # --- out-of-band operations --------------------------------------------

    async def interview(self, agent_id: str, question: str, round_stamp: int) -> str:
        """Chat exchange outside the round lifecycle: logged, never queued,
        never counted toward activation or completions."""
        if agent_id not in self.agents:
            raise UnknownAgentError(agent_id)
        ask = EventEnvelope(
            event_name="InterviewEvent", source=ENV_SOURCE, targets=[agent_id],
            payload={"question": question}, round_stamp=round_stamp, kind=KIND_CHAT)
        self.bus.log_only(ask)
        self.bus.ledger.record(ask, agent_id)
        answer = await self.agents[agent_id].answer_chat(question)
        reply = EventEnvelope(
            event_name="InterviewReplyEvent", source=agent_id, targets=[ENV_SOURCE],
            payload={"answer": answer}, round_stamp=round_stamp, kind=KIND_CHAT)
        self.bus.log_only(reply)
        self.bus.ledger.record(reply, ENV_SOURCE)
        return answer

    def collect_direct(self) -> list[tuple[str, dict]]:
        """Single-process data collection: read agent states directly."""
        return [(aid, self.agents[aid].collect_payload())
                for aid in sorted(self.agents)]
