"""Per-run stream fan-out.

Three channels with independent monotonic sequence numbers: metrics (one
frame per recorded metrics row), events (one frame per log line), status
(state machine and round progress). A late subscriber first gets one
snapshot frame per channel carrying everything retained so far, stamped
with the channel's current sequence number so clients can de-duplicate,
then live frames continue from there.
"""
from __future__ import annotations

import asyncio

from ..errors import ConfigurationError

CHANNELS = ("metrics", "events", "status")

# How many items each channel replays to a late subscriber. None keeps
# everything; status only ever needs its latest word.
_RETAIN = {"metrics": None, "events": None, "status": 1}


class StreamHub:
    def __init__(self) -> None:
        self._seq = {channel: 0 for channel in CHANNELS}
        self._history: dict[str, list[dict]] = {c: [] for c in CHANNELS}
        self._subscribers: list[tuple[asyncio.Queue, tuple[str, ...]]] = []

    def publish(self, channel: str, body: dict) -> int:
        if channel not in CHANNELS:
            raise ConfigurationError("unknown stream channel %r" % (channel,))
        self._seq[channel] += 1
        seq = self._seq[channel]
        history = self._history[channel]
        history.append(body)
        keep = _RETAIN[channel]
        if keep is not None and len(history) > keep:
            del history[:-keep]
        frame = {"channel": channel, "seq": seq, "body": body}
        for queue, channels in self._subscribers:
            if channel in channels:
                queue.put_nowait(frame)
        return seq

    def subscribe(self, channels: tuple[str, ...] = CHANNELS
                  ) -> tuple[asyncio.Queue, list[dict]]:
        """Returns the live queue plus the snapshot frames to send first."""
        for channel in channels:
            if channel not in CHANNELS:
                raise ConfigurationError(
                    "unknown stream channel %r" % (channel,))
        queue: asyncio.Queue = asyncio.Queue()
        snapshots = []
        for channel in channels:
            history = self._history[channel]
            if history:
                snapshots.append({
                    "channel": channel,
                    "seq": self._seq[channel],
                    "body": {"snapshot": True, "items": list(history)},
                })
        self._subscribers.append((queue, tuple(channels)))
        return queue, snapshots

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        self._subscribers = [(q, c) for q, c in self._subscribers
                             if q is not queue]

    def seq_of(self, channel: str) -> int:
        return self._seq[channel]

    @property
    def subscriber_count(self) -> int:
        return len(self._subscribers)
