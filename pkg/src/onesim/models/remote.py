"""Client for chat-completion inference services.

Speaks the common JSON shape: POST {model, messages}, read
choices[0].message.content. Transient failures get up to three attempts
with exponential backoff; a completion that arrives but lacks the expected
shape is its own error, never retried.
"""
from __future__ import annotations

import asyncio
import logging
import os
import time

import httpx

from ..errors import BackendUnavailableError, MalformedCompletionError
from .base import DecisionRequest, DecisionResponse, check_outputs
from .parsing import parse_structured

log = logging.getLogger(__name__)

ENDPOINT_ENV = "ONESIM_MODEL_ENDPOINT"


class RemoteBackend:
    def __init__(self, endpoint: str | None = None, model_name: str = "default",
                 timeout_s: float = 30.0, max_retries: int = 3,
                 max_in_flight: int = 64,
                 client: httpx.AsyncClient | None = None):
        endpoint = os.environ.get(ENDPOINT_ENV) or endpoint
        if not endpoint:
            raise BackendUnavailableError(
                "no inference endpoint configured (set %s or pass endpoint=)"
                % ENDPOINT_ENV)
        self.endpoint = endpoint
        self.model_name = model_name
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.retry_count = 0
        self._gate = asyncio.Semaphore(max_in_flight)
        self._client = client or httpx.AsyncClient(timeout=timeout_s)

    async def _post(self, body: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt:
                self.retry_count += 1
                delay = 0.2 * (2 ** (attempt - 1))
                log.warning("retrying inference call (attempt %d) after %s",
                            attempt + 1, last_error)
                await asyncio.sleep(delay)
            try:
                resp = await self._client.post(self.endpoint, json=body)
                if resp.status_code >= 500:
                    last_error = BackendUnavailableError(
                        "inference service returned %d" % resp.status_code)
                    continue
                resp.raise_for_status()
                return resp.json()
            except (httpx.TransportError, httpx.TimeoutException) as exc:
                last_error = exc
        raise BackendUnavailableError(
            "inference call timed out after %d attempts: %s"
            % (self.max_retries, last_error))

    async def decide(self, request: DecisionRequest) -> DecisionResponse:
        t0 = time.monotonic()
        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
        }
        async with self._gate:
            doc = await self._post(body)
        try:
            content = doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise MalformedCompletionError(
                "completion missing choices[0].message.content") from None
        if not isinstance(content, str):
            raise MalformedCompletionError("completion content is not text")
        parsed = parse_structured(content, request.expected_outputs)
        parsed = check_outputs(parsed, request.expected_outputs)
        return DecisionResponse(raw=content, parsed=parsed,
                                latency_s=time.monotonic() - t0)

    async def aclose(self) -> None:
        await self._client.aclose()
