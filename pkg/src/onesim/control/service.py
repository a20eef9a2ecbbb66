"""The live management service.

One process owns any number of runs. Commands arrive as HTTP POSTs and
funnel into each run's ordered command log; metrics, events, and status
leave over a stream connection as newline-delimited JSON frames. The
service never computes simulation state of its own — everything it serves
is read from the run it manages.
"""
from __future__ import annotations

import asyncio
import itertools
import json

from fastapi import FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse

from ..errors import (
    ConfigurationError,
    IllegalTransitionError,
    InvalidRangeError,
    ManifestError,
    MalformedCompletionError,
    OneSimError,
    RefinementFailedError,
    RunNotActiveError,
    UnknownAgentError,
)
from ..feedback import CaptureSink, FeedbackQueue
from ..manifest import RunManifest, build_backend
from ..run import SimulationRun, metrics_csv
from .streams import CHANNELS, StreamHub

COMMAND_KINDS = (
    "start", "pause", "resume", "stop", "broadcast", "get_profile",
    "set_profile", "interview", "list_agents", "subscribe_metrics",
    "subscribe_events", "feedback_fetch", "feedback_submit",
)


class ManagedRun:
    """A SimulationRun plus everything the service hangs off it: the
    stream hub, the capture sink, and the human review queue."""

    def __init__(self, run_id: str, manifest: RunManifest):
        self.run_id = run_id
        self.manifest = manifest
        scenario = manifest.build()
        self.sink = CaptureSink() if manifest.capture else None
        self.queue = FeedbackQueue(threshold=manifest.threshold)
        backend = build_backend(manifest, scenario, sink=self.sink)
        self.run = SimulationRun(scenario, backend=backend,
                                 log_path=manifest.log_file, mode=manifest.mode,
                                 tick_interval_ms=manifest.tick_interval_ms)
        self.hub = StreamHub()
        self.task: asyncio.Task | None = None
        self.error: str | None = None
        self._log_cursor = 0
        self._metrics_cursor = 0
        self.run.add_round_listener(self._on_round)

    # --- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        if self.task is not None:
            raise IllegalTransitionError(self.run.state, "running")
        self.task = asyncio.ensure_future(self._drive())

    async def _drive(self) -> None:
        try:
            await self.run.run()
        except Exception as exc:
            self.error = "%s: %s" % (type(exc).__name__, exc)
        finally:
            self._flush_streams()
            self._publish_status()

    def _on_round(self, report, row) -> None:
        # Listeners fire after the scheduler advances its round counter, so
        # scheduler.round is already the upcoming round here.
        self._flush_streams()
        self._publish_status()

    def _flush_streams(self) -> None:
        rows = self.run.metrics_rows
        for row in rows[self._metrics_cursor:]:
            self.hub.publish("metrics", {"row": row})
        self._metrics_cursor = len(rows)
        lines = self.run.log.lines()
        for line in lines[self._log_cursor:]:
            self.hub.publish("events", json.loads(line))
        self._log_cursor = len(lines)

    def _publish_status(self) -> None:
        body = {"state": self.run.state, "round": self.run.scheduler.round}
        if self.error:
            body["error"] = self.error
        self.hub.publish("status", body)

    # --- commands ------------------------------------------------------------

    async def command(self, kind: str, args: dict) -> dict:
        if kind not in COMMAND_KINDS:
            raise ConfigurationError(
                "unknown command kind %r (one of %s)"
                % (kind, ", ".join(COMMAND_KINDS)))
        handler = getattr(self, "_cmd_" + kind)
        result = handler(args)
        if asyncio.iscoroutine(result):
            result = await result
        return result

    async def _cmd_start(self, args: dict) -> dict:
        self.start()
        # Yield once so the run task executes its synchronous head (the
        # created -> running transition and the opening metrics row) before
        # the caller sees the reply.
        await asyncio.sleep(0)
        return {"state": self.run.state}

    def _cmd_pause(self, args: dict) -> dict:
        state = self.run.pause()
        self._publish_status()
        return {"state": state}

    def _cmd_resume(self, args: dict) -> dict:
        state = self.run.resume()
        self._publish_status()
        return {"state": state}

    def _cmd_stop(self, args: dict) -> dict:
        state = self.run.stop()
        self._publish_status()
        return {"state": state}

    def _cmd_broadcast(self, args: dict) -> dict:
        payload = args.get("payload")
        if payload is None:
            if "text" not in args:
                raise ConfigurationError(
                    "broadcast needs a payload object or a text field")
            payload = {"text": str(args["text"])}
        return {"recipients": self.run.broadcast(dict(payload))}

    def _cmd_get_profile(self, args: dict) -> dict:
        return self.run.get_profile(str(args["agent_id"]))

    def _cmd_set_profile(self, args: dict) -> dict:
        return self.run.set_profile(
            str(args["agent_id"]), str(args["attr"]), args["value"],
            args.get("visibility"))

    async def _cmd_interview(self, args: dict) -> dict:
        answer = await self.run.interview(
            str(args["agent_id"]), str(args["question"]))
        return {"agent_id": args["agent_id"], "answer": answer}

    def _cmd_list_agents(self, args: dict) -> dict:
        rows = [{"agent_id": agent.agent_id,
                 "agent_type": agent.profile.agent_type}
                for agent in self.run.agents.values()]
        rows.sort(key=lambda r: r["agent_id"])
        return {"agents": rows, "count": len(rows)}

    def _cmd_subscribe_metrics(self, args: dict) -> dict:
        return {"stream": self._stream_path("metrics")}

    def _cmd_subscribe_events(self, args: dict) -> dict:
        return {"stream": self._stream_path("events")}

    def _stream_path(self, channel: str) -> str:
        return "/api/runs/%s/stream?channels=%s" % (self.run_id, channel)

    def _cmd_feedback_fetch(self, args: dict) -> dict:
        if self.sink is not None:
            for sample in self.sink.take():
                self.queue.put(sample)
        limit = args.get("limit")
        return {"items": self.queue.fetch(None if limit is None else int(limit)),
                "pending": self.queue.pending}

    def _cmd_feedback_submit(self, args: dict) -> dict:
        verdict = self.queue.submit(
            int(args["item_id"]),
            score=args.get("score"),
            rationale=str(args.get("rationale", "")),
            refined=str(args.get("refined", "")))
        self.run.record_command("feedback_submit", dict(args))
        return verdict

    # --- views ---------------------------------------------------------------

    def describe(self) -> dict:
        info = {
            "run_id": self.run_id,
            "scenario": self.manifest.scenario,
            "state": self.run.state,
            "round": self.run.scheduler.round,
            "max_rounds": self.run.scenario.max_rounds,
            "n_agents": len(self.run.agents),
            "metrics_rows": len(self.run.metrics_rows),
            "feedback_pending": self.queue.pending,
            "captured": 0 if self.sink is None else len(self.sink),
        }
        if self.error:
            info["error"] = self.error
        return info


class ControlService:
    def __init__(self) -> None:
        self.runs: dict[str, ManagedRun] = {}
        self._ids = itertools.count(1)

    def create(self, manifest: RunManifest) -> ManagedRun:
        run_id = "run-%d" % next(self._ids)
        managed = ManagedRun(run_id, manifest)
        self.runs[run_id] = managed
        return managed

    def get(self, run_id: str) -> ManagedRun:
        if run_id not in self.runs:
            raise HTTPException(status_code=404,
                                detail="no run named %r" % run_id)
        return self.runs[run_id]


_STATUS_BY_ERROR: tuple[tuple[type, int], ...] = (
    (UnknownAgentError, 404),
    (IllegalTransitionError, 409),
    (RunNotActiveError, 409),
    (RefinementFailedError, 422),
    (MalformedCompletionError, 422),
    (InvalidRangeError, 400),
    (ManifestError, 400),
    (ConfigurationError, 400),
    (OneSimError, 500),
)


def _manifest_from_request(doc: dict) -> RunManifest:
    if not isinstance(doc, dict):
        raise ManifestError("the run request must be a JSON object")
    if "scenario" not in doc:
        raise ManifestError("the run request names no scenario")
    allowed = {"scenario", "config", "seed", "rounds", "mode",
               "tick_interval_ms", "capture", "threshold", "log_file"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ManifestError(
            "unknown run request fields: %s" % ", ".join(unknown))
    return RunManifest(**doc)


def create_app(service: ControlService | None = None) -> FastAPI:
    service = service or ControlService()
    app = FastAPI(title="onesim control", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.exception_handler(OneSimError)
    async def _taxonomy(request: Request, exc: OneSimError):
        for etype, status in _STATUS_BY_ERROR:
            if isinstance(exc, etype):
                return JSONResponse(
                    status_code=status,
                    content={"error": type(exc).__name__, "detail": str(exc)})
        raise exc  # unreachable: OneSimError is the last row

    @app.post("/api/runs")
    async def create_run(request: Request):
        doc = await request.json()
        managed = service.create(_manifest_from_request(doc))
        return {"run_id": managed.run_id, "state": managed.run.state}

    @app.get("/api/runs")
    async def list_runs():
        return {"runs": [m.describe() for m in service.runs.values()]}

    @app.get("/api/runs/{run_id}")
    async def describe_run(run_id: str):
        return service.get(run_id).describe()

    @app.post("/api/runs/{run_id}/command")
    async def command(run_id: str, request: Request):
        managed = service.get(run_id)
        doc = await request.json()
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigurationError("a command is {kind, args}")
        result = await managed.command(doc["kind"], doc.get("args") or {})
        return {"kind": doc["kind"], "result": result}

    @app.get("/api/runs/{run_id}/metrics.csv")
    async def metrics_file(run_id: str):
        managed = service.get(run_id)
        return PlainTextResponse(metrics_csv(managed.run.metrics_rows),
                                 media_type="text/csv")

    @app.websocket("/api/runs/{run_id}/stream")
    async def stream(websocket: WebSocket, run_id: str,
                     channels: str = ",".join(CHANNELS)):
        await websocket.accept()
        if run_id not in service.runs:
            await websocket.close(code=4404)
            return
        wanted = tuple(c.strip() for c in channels.split(",") if c.strip())
        if not wanted or any(c not in CHANNELS for c in wanted):
            await websocket.close(code=4400)
            return
        managed = service.runs[run_id]
        queue, snapshots = managed.hub.subscribe(wanted)
        try:
            for frame in snapshots:
                await websocket.send_text(json.dumps(frame) + "\n")
            while True:
                frame = await queue.get()
                await websocket.send_text(json.dumps(frame) + "\n")
        except WebSocketDisconnect:
            pass
        finally:
            managed.hub.unsubscribe(queue)

    return app
