"""The unit of all simulation traffic.

Envelope identity is deterministic: the bus stamps each published envelope
with a per-source monotonic ``seq`` and derives ``event_id`` as
``"{source}#{seq}"``. No uuids, no wall-clock timestamps — two runs with the
same seed produce envelopes that are equal field for field, which is what
makes sorted event logs byte-comparable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

ENV_SOURCE = "ENV"
BROADCAST = "BROADCAST"

KIND_START = "start"
KIND_DOMAIN = "domain"
KIND_COMPLETION = "completion"
KIND_COLLECT = "data-collection"
KIND_TERMINATE = "terminate"
KIND_BROADCAST = "broadcast"
KIND_CHAT = "chat"

KINDS = frozenset({
    KIND_START, KIND_DOMAIN, KIND_COMPLETION, KIND_COLLECT,
    KIND_TERMINATE, KIND_BROADCAST, KIND_CHAT,
})

# Delivery of these kinds marks an agent as activated for the round barrier;
# chat is out-of-band and never does.
ACTIVATING_KINDS = frozenset({KIND_START, KIND_DOMAIN, KIND_BROADCAST})


@dataclass
class EventEnvelope:
    event_name: str
    source: str
    targets: list[str]
    payload: dict
    round_stamp: int
    kind: str = KIND_DOMAIN
    seq: int | None = None          # stamped by the bus at publish
    event_id: str = ""              # derived from (source, seq) at publish

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.round_stamp < 0:
            raise ValueError("round_stamp must be non-negative")
        # Canonical payload key order so serialized envelopes are stable.
        self.payload = dict(sorted(self.payload.items()))

    @property
    def published(self) -> bool:
        return self.seq is not None

    def stamp(self, seq: int) -> None:
        if self.published:
            raise ValueError(f"envelope {self.event_id} already published")
        self.seq = seq
        self.event_id = f"{self.source}#{seq}"

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "event_name": self.event_name,
            "kind": self.kind,
            "source": self.source,
            "targets": list(self.targets),
            "round_stamp": self.round_stamp,
            "seq": self.seq,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EventEnvelope":
        env = cls(
            event_name=doc["event_name"],
            source=doc["source"],
            targets=list(doc["targets"]),
            payload=dict(doc["payload"]),
            round_stamp=doc["round_stamp"],
            kind=doc["kind"],
        )
        if doc.get("seq") is not None:
            env.seq = doc["seq"]
            env.event_id = doc.get("event_id") or f"{env.source}#{env.seq}"
        return env

    def conservation_key(self) -> tuple:
        """Identity-free content view: equal across runs and worker layouts."""
        import json
        return (self.event_name, self.kind, self.source, tuple(self.targets),
                json.dumps(self.payload, sort_keys=True))
