"""Run manifests: one JSON file that pins everything a run needs.

The CLI reads these so a run is reproducible from a single artifact:
scenario and config, seed, horizon, backend choice, worker count, output
directory. Validation is strict and happens before anything executes;
typos or missing pieces die as ManifestError, never mid-run.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ManifestError
from .feedback.records import check_score
from .scenarios import ScenarioDef, build_scenario, scenario_names

MODES = ("round", "tick")
BACKENDS = ("rule", "remote")

_FIELDS = {
    "scenario", "config", "seed", "rounds", "mode", "tick_interval_ms",
    "backend", "remote", "workers", "out_dir", "log_file", "capture",
    "threshold",
}


@dataclass(frozen=True)
class RunManifest:
    scenario: str
    config: dict = field(default_factory=dict)
    seed: int = 0
    rounds: int | None = None
    mode: str = "round"
    tick_interval_ms: int | None = None
    backend: str = "rule"
    remote: dict = field(default_factory=dict)
    workers: int = 1
    out_dir: str = "artifacts"
    log_file: str | None = None
    capture: bool = False
    threshold: float = 3.0

    def __post_init__(self) -> None:
        if self.scenario not in scenario_names():
            raise ManifestError(
                "unknown scenario %r (have: %s)"
                % (self.scenario, ", ".join(scenario_names())))
        if self.mode not in MODES:
            raise ManifestError("mode must be one of %s" % (", ".join(MODES)))
        if self.backend not in BACKENDS:
            raise ManifestError(
                "backend must be one of %s" % (", ".join(BACKENDS)))
        if self.workers < 1:
            raise ManifestError("workers must be at least 1")
        if self.rounds is not None and self.rounds < 1:
            raise ManifestError("rounds must be at least 1")
        if "seed" in self.config:
            raise ManifestError(
                "give the seed once, at the top level, not inside config")
        if self.rounds is not None and "max_rounds" in self.config:
            raise ManifestError(
                "give the horizon once: either rounds or config.max_rounds")
        if self.backend == "remote" and not self.remote.get("endpoint"):
            raise ManifestError("a remote backend needs remote.endpoint")
        if self.workers > 1:
            for flag, why in ((self.capture, "feedback capture"),
                              (self.backend == "remote", "a remote backend"),
                              (self.mode == "tick", "tick mode")):
                if flag:
                    raise ManifestError(
                        "%s needs a single-node run (workers = 1)" % why)
        try:
            check_score(self.threshold)
        except Exception as exc:
            raise ManifestError(str(exc)) from None

    def scenario_config(self) -> dict:
        merged = dict(self.config)
        merged["seed"] = self.seed
        if self.rounds is not None:
            merged["max_rounds"] = self.rounds
        return merged

    def build(self) -> ScenarioDef:
        return build_scenario(self.scenario, self.scenario_config())

    def ensure_out_dir(self) -> Path:
        out = Path(self.out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ManifestError(
                "cannot create output directory %s: %s" % (out, exc)) from None
        if not os.access(out, os.W_OK):
            raise ManifestError("output directory %s is not writable" % out)
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def build_backend(manifest: RunManifest, scenario: ScenarioDef, sink=None):
    """The decision backend a manifest asks for, optionally wrapped with
    feedback capture."""
    from .models import RuleBackend, with_capture
    if manifest.backend == "remote":
        from .models.remote import RemoteBackend
        backend = RemoteBackend(**manifest.remote)
    else:
        backend = RuleBackend(scenario.rules, chat_rule=scenario.chat_rule)
    if sink is not None:
        backend = with_capture(backend, sink)
    return backend


def load_manifest(path: str | Path) -> RunManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError("no manifest at %s" % path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError("manifest %s is not valid JSON: %s"
                            % (path, exc)) from None
    if not isinstance(doc, dict):
        raise ManifestError("manifest %s must hold a JSON object" % path)
    unknown = sorted(set(doc) - _FIELDS)
    if unknown:
        raise ManifestError(
            "manifest %s has unknown fields: %s" % (path, ", ".join(unknown)))
    if "scenario" not in doc:
        raise ManifestError("manifest %s names no scenario" % path)
    return RunManifest(**doc)
