"""Backend decorators: latency injection and feedback capture."""
from __future__ import annotations

import asyncio
import time

from ..errors import ConfigurationError, DecisionParseError, PayloadTypeError
from ..rngkit import DetStream
from .base import DecisionBackend, DecisionRequest, DecisionResponse


class _Latency:
    """Delays every decision to emulate a slow inference service. The delay
    itself is all this adds; payloads pass through untouched."""

    def __init__(self, inner: DecisionBackend, constant_ms: float | None,
                 uniform_ms: tuple[float, float] | None, seed: int):
        if (constant_ms is None) == (uniform_ms is None):
            raise ConfigurationError(
                "give exactly one of constant_ms or uniform_ms")
        if constant_ms is not None and constant_ms < 0:
            raise ConfigurationError("constant_ms must not be negative")
        if uniform_ms is not None and not 0 <= uniform_ms[0] <= uniform_ms[1]:
            raise ConfigurationError("uniform_ms range must be ordered and non-negative")
        self.inner = inner
        self.constant_ms = constant_ms
        self.uniform_ms = uniform_ms
        self._stream = DetStream(seed)

    def _sample_ms(self) -> float:
        if self.constant_ms is not None:
            return self.constant_ms
        lo, hi = self.uniform_ms  # type: ignore[misc]
        return self._stream.uniform(lo, hi)

    async def decide(self, request: DecisionRequest) -> DecisionResponse:
        t0 = time.monotonic()
        delay = self._sample_ms() / 1000.0
        if delay > 0:
            await asyncio.sleep(delay)
        resp = await self.inner.decide(request)
        return DecisionResponse(raw=resp.raw, parsed=resp.parsed,
                                latency_s=time.monotonic() - t0)


def with_latency(inner: DecisionBackend, constant_ms: float | None = None,
                 uniform_ms: tuple[float, float] | None = None,
                 seed: int = 0) -> _Latency:
    return _Latency(inner, constant_ms, uniform_ms, seed)


class _Capture:
    """Feeds every prompt/response pair to a sink as it happens. Parse and
    type failures are recorded too, flagged, then re-raised."""

    def __init__(self, inner: DecisionBackend, sink):
        self.inner = inner
        self.sink = sink

    async def decide(self, request: DecisionRequest) -> DecisionResponse:
        t0 = time.monotonic()
        try:
            resp = await self.inner.decide(request)
        except DecisionParseError as exc:
            self.sink.record(request=request, raw=exc.raw, parsed=None,
                             ok=False, latency_s=time.monotonic() - t0)
            raise
        except PayloadTypeError:
            self.sink.record(request=request, raw="", parsed=None,
                             ok=False, latency_s=time.monotonic() - t0)
            raise
        self.sink.record(request=request, raw=resp.raw, parsed=resp.parsed,
                         ok=True, latency_s=resp.latency_s)
        return resp


def with_capture(inner: DecisionBackend, sink) -> _Capture:
    return _Capture(inner, sink)
