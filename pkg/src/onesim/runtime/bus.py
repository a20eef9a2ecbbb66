"""Event bus: publication, subscription, and pending-wave buffering.

Publishing stamps the envelope (per-source seq, derived event id), appends
it to the run log, and buffers it for the next delivery wave. The host
drains waves; the bus itself never invokes handlers. All of this runs on one
event loop, so plain data structures suffice — handlers may publish
concurrently from many tasks but each call completes atomically.
"""
from __future__ import annotations

from ..errors import QueueClosedError, UnknownAgentError
from .envelope import EventEnvelope
from .eventlog import EventLog


class DeliveryLedger:
    """Per-delivery records backing the exactly-once and conservation audits."""

    def __init__(self):
        self.rows: list[dict] = []

    def record(self, env: EventEnvelope, target: str, path: str = "local") -> None:
        self.rows.append({
            "event_id": env.event_id,
            "event_name": env.event_name,
            "kind": env.kind,
            "source": env.source,
            "target": target,
            "round_stamp": env.round_stamp,
            "payload": env.payload,
            "path": path,
        })

    def conservation_multiset(self, kinds: set[str] | None = None) -> dict:
        """Multiset of identity-free delivery keys, optionally kind-filtered."""
        import json
        counts: dict[tuple, int] = {}
        for row in self.rows:
            if kinds and row["kind"] not in kinds:
                continue
            key = (row["event_name"], row["kind"], row["source"], row["target"],
                   json.dumps(row["payload"], sort_keys=True))
            counts[key] = counts.get(key, 0) + 1
        return counts

    def __len__(self) -> int:
        return len(self.rows)


class EventBus:
    def __init__(self, log: EventLog | None = None):
        self.log = log if log is not None else EventLog()
        self.ledger = DeliveryLedger()
        self._seq: dict[str, int] = {}
        self._subs: dict[str, set[str]] = {}
        self._agents: list[str] = []
        self._pending: list[EventEnvelope] = []
        self._closed = False

    # --- registration -------------------------------------------------------

    def register_agent(self, agent_id: str) -> None:
        if agent_id not in self._subs:
            self._subs[agent_id] = set()
            self._agents.append(agent_id)

    def subscribe(self, agent_id: str, event_names: set[str]) -> tuple[str, frozenset]:
        if agent_id not in self._subs:
            raise UnknownAgentError(agent_id)
        self._subs[agent_id].update(event_names)
        return (agent_id, frozenset(event_names))

    def subscriptions(self, agent_id: str) -> set[str]:
        if agent_id not in self._subs:
            raise UnknownAgentError(agent_id)
        return set(self._subs[agent_id])

    def is_subscribed(self, agent_id: str, event_name: str) -> bool:
        return event_name in self._subs.get(agent_id, ())

    def agent_ids(self) -> list[str]:
        return list(self._agents)

    # --- publication --------------------------------------------------------

    def publish(self, env: EventEnvelope) -> str:
        """Stamp, log, and enqueue an envelope; returns its event id."""
        if self._closed:
            raise QueueClosedError("bus closed; run has terminated")
        seq = self._seq.get(env.source, 0) + 1
        self._seq[env.source] = seq
        env.stamp(seq)
        self.log.append(env)
        self._pending.append(env)
        return env.event_id

    def log_only(self, env: EventEnvelope) -> str:
        """Stamp and log without queueing (out-of-band traffic like chat,
        and the terminate marker, which lands after intake closes)."""
        seq = self._seq.get(env.source, 0) + 1
        self._seq[env.source] = seq
        env.stamp(seq)
        self.log.append(env)
        return env.event_id

    def ingest(self, env: EventEnvelope) -> None:
        """Queue an envelope stamped and logged on another node's bus.

        Remote envelopes keep their origin event id; stamping or logging
        them again here would fork their identity, so this path does
        neither — the origin node's log is the publication record."""
        if self._closed:
            raise QueueClosedError("bus closed; run has terminated")
        self._pending.append(env)

    def seq_of(self, source: str) -> int:
        return self._seq.get(source, 0)

    def resume_seq(self, source: str, value: int) -> None:
        """Continue a source's stamp numbering started on another bus.  An
        agent that moves between nodes must keep its ids unique across every
        bus that ever stamps for it."""
        self._seq[source] = max(self._seq.get(source, 0), value)

    def take_wave(self) -> list[EventEnvelope]:
        """Swap out everything published since the last wave, in a stable
        (round, source, seq) order."""
        wave = self._pending
        self._pending = []
        wave.sort(key=lambda e: (e.round_stamp, e.source, e.seq))
        return wave

    @property
    def has_pending(self) -> bool:
        return bool(self._pending)

    @property
    def closed(self) -> bool:
        return self._closed

    def close(self) -> list[str]:
        """Close publication; returns ids of envelopes never delivered."""
        self._closed = True
        dropped = [env.event_id for env in self._pending]
        self._pending = []
        return dropped
