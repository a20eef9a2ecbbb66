"""Asynchronous event bus, wave dispatcher, and round/tick scheduling."""
from .envelope import (
    BROADCAST,
    ENV_SOURCE,
    KIND_BROADCAST,
    KIND_CHAT,
    KIND_COLLECT,
    KIND_COMPLETION,
    KIND_DOMAIN,
    KIND_START,
    KIND_TERMINATE,
    EventEnvelope,
)
from .eventlog import EventLog, audit_exactly_once, audit_round_barrier, sort_key
from .bus import DeliveryLedger, EventBus
from .host import AgentHost
from .scheduler import RoundReport, Scheduler, SchedulerConfig, TickReport

__all__ = [
    "AgentHost",
    "BROADCAST",
    "DeliveryLedger",
    "ENV_SOURCE",
    "EventBus",
    "EventEnvelope",
    "EventLog",
    "KIND_BROADCAST",
    "KIND_CHAT",
    "KIND_COLLECT",
    "KIND_COMPLETION",
    "KIND_DOMAIN",
    "KIND_START",
    "KIND_TERMINATE",
    "RoundReport",
    "Scheduler",
    "SchedulerConfig",
    "TickReport",
    "audit_exactly_once",
    "audit_round_barrier",
    "sort_key",
]
