"""Command line front end.

Everything a run needs lives in a manifest file; the CLI loads it, rejects
it before any work starts if it is malformed, and otherwise leaves a
directory of artifacts behind. Single-node and multi-worker runs write the
same conservation record so their delivered-event multisets can be compared
file against file.
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import click

from .errors import ManifestError, OneSimError
from .feedback import (
    DATASET_KINDS,
    SUFFIXES,
    CaptureSink,
    FeedbackPipeline,
    PipelineConfig,
    Quadruplet,
    export_dataset,
)
from .graph import load_graph, validate_dataflow, validate_structure
from .manifest import BACKENDS, MODES, build_backend, load_manifest
from .run import SimulationRun, metrics_csv
from .scenarios.base import build_scenario, scenario_names


def _fail(exc: Exception) -> None:
    cls = type(exc)
    click.echo("%s.%s: %s" % (cls.__module__, cls.__qualname__, exc), err=True)
    raise SystemExit(1)


def _published(lines: list[str]) -> list[str]:
    return sorted(line for line in lines if '"event_id"' in line)


def _write_conservation(out: Path, published: list[str]) -> Path:
    """One comparable record of what the run delivered: the count and a
    digest over the sorted published envelopes. Worker topology must not
    change either number."""
    blob = "".join(line + "\n" for line in published)
    doc = {"events": len(published),
           "sha256": hashlib.sha256(blob.encode("utf-8")).hexdigest()}
    path = out / "conservation.json"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


@click.group()
def main() -> None:
    """Drive agent simulations: validate behavior graphs, execute runs
    from manifests, export feedback datasets, serve the control API."""


@main.command()
@click.argument("graph_path", type=click.Path())
def validate(graph_path: str) -> None:
    """Check a behavior graph file; violations go to stderr."""
    try:
        graph = load_graph(graph_path)
    except OneSimError as exc:
        _fail(exc)
    report = validate_structure(graph)
    if report.ok:
        report = validate_dataflow(graph)
    if not report.ok:
        click.echo(report.render(), err=True)
        raise SystemExit(1)
    click.echo("ok: %d nodes, %d edges"
               % (len(graph.nodes), len(graph.edges)))


@main.command(name="run")
@click.option("--scenario", "manifest_path", required=True, type=click.Path(),
              help="Path to the run manifest.")
@click.option("--mode", type=click.Choice(MODES), default=None,
              help="Override the manifest's scheduling mode.")
@click.option("--rounds", type=int, default=None,
              help="Override the round budget.")
@click.option("--seed", type=int, default=None, help="Override the seed.")
@click.option("--workers", type=int, default=None,
              help="Override the worker count.")
@click.option("--backend", type=click.Choice(BACKENDS), default=None,
              help="Override the decision backend.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Override the output directory.")
def cmd_run(manifest_path: str, mode: str | None, rounds: int | None,
            seed: int | None, workers: int | None, backend: str | None,
            out_dir: str | None) -> None:
    """Execute the run a manifest describes and write its artifacts."""
    overrides = {key: value for key, value in (
        ("mode", mode), ("rounds", rounds), ("seed", seed),
        ("workers", workers), ("backend", backend), ("out_dir", out_dir),
    ) if value is not None}
    try:
        manifest = load_manifest(manifest_path)
        if overrides:
            manifest = replace(manifest, **overrides)
        out = manifest.ensure_out_dir()
    except ManifestError as exc:
        _fail(exc)

    if manifest.workers == 1:
        _run_single(manifest, out)
    else:
        _run_distributed(manifest, out)


def _run_single(manifest, out: Path) -> None:
    scenario = manifest.build()
    sink = CaptureSink() if manifest.capture else None
    backend = build_backend(manifest, scenario, sink=sink)
    run = SimulationRun(scenario, backend=backend,
                        log_path=manifest.log_file, mode=manifest.mode,
                        tick_interval_ms=manifest.tick_interval_ms)
    try:
        run.run_sync()
    except OneSimError as exc:
        _fail(exc)

    problems = run.audit()
    if problems:
        for line in problems:
            click.echo("audit: %s" % line, err=True)
        raise SystemExit(1)

    paths = run.export_artifacts(out)
    _write_conservation(out, _published(run.log.sorted_lines()))

    if sink is not None:
        feedback_dir = out / "feedback"
        feedback_dir.mkdir(exist_ok=True)
        pipeline = FeedbackPipeline(PipelineConfig(threshold=manifest.threshold))
        report = pipeline.process_sync(sink.take())
        (feedback_dir / "quadruplets.json").write_text(
            json.dumps([asdict(q) for q in report.quadruplets], indent=2)
            + "\n", encoding="utf-8")
        click.echo("feedback: %d passed, %d quadruplets, %d failed"
                   % (len(report.passed), len(report.quadruplets),
                      len(report.failed)))

    click.echo("finished: %d rounds, %d events, %d metrics rows"
               % (run.scheduler.round, len(run.log), len(run.metrics_rows)))
    for name in sorted(paths):
        click.echo("  %s" % paths[name])


def _run_distributed(manifest, out: Path) -> None:
    from .dist.runner import run_distributed_sync

    try:
        result = run_distributed_sync(
            manifest.scenario, manifest.scenario_config(), manifest.workers,
            subprocess_workers=True)
    except OneSimError as exc:
        _fail(exc)

    problems = result.audit()
    if problems:
        for line in problems:
            click.echo("audit: %s" % line, err=True)
        raise SystemExit(1)

    all_lines: list[str] = list(result.master_log_lines)
    for lines in result.worker_logs.values():
        all_lines.extend(lines)
    published = _published(all_lines)

    (out / "events.ndjson").write_text(
        "".join(line + "\n" for line in published), encoding="utf-8")
    if result.metrics_rows:
        (out / "metrics.csv").write_text(metrics_csv(result.metrics_rows),
                                         encoding="utf-8")
    (out / "plan.json").write_text(json.dumps({
        "assignment": result.plan.assignment,
        "cut_edges": result.plan.cut_edges,
        "balance": result.plan.balance,
        "registry": result.registry_snapshot,
        "worker_counters": result.worker_counters,
        "reason": result.reason,
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_conservation(out, published)

    click.echo("finished: %d rounds across %d workers, %d events"
               % (len(result.reports), manifest.workers, len(published)))
    click.echo("  %s" % (out / "events.ndjson"))


@main.command(name="export-feedback")
@click.argument("run_dir", type=click.Path())
@click.option("--format", "kind", type=click.Choice(DATASET_KINDS),
              required=True, help="Dataset flavor to write.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Target file; defaults into the run directory.")
def cmd_export_feedback(run_dir: str, kind: str, out_path: str | None) -> None:
    """Write a run's stored quadruplets as a tuning dataset."""
    source = Path(run_dir) / "feedback" / "quadruplets.json"
    if not source.exists():
        click.echo("no feedback under %s (expected %s)" % (run_dir, source),
                   err=True)
        raise SystemExit(1)
    quads = [Quadruplet(**row) for row in json.loads(source.read_text())]
    target = Path(out_path) if out_path else \
        Path(run_dir) / "feedback" / ("dataset" + SUFFIXES[kind])
    try:
        export_dataset(quads, target, kind=kind)
    except OneSimError as exc:
        _fail(exc)
    click.echo(str(target))


@main.command()
@click.option("--serve", "addr", default="127.0.0.1:8765", show_default=True,
              help="host:port to listen on.")
@click.option("--scenario", "manifest_path", type=click.Path(), default=None,
              help="Manifest to preload as a run (not started).")
def serve(addr: str, manifest_path: str | None) -> None:
    """Serve the control API over HTTP."""
    import uvicorn

    from .control import ControlService, create_app

    service = ControlService()
    if manifest_path:
        try:
            managed = service.create(load_manifest(manifest_path))
        except ManifestError as exc:
            _fail(exc)
        click.echo("preloaded %s (%s)"
                   % (managed.run_id, managed.manifest.scenario))
    host, _, port = addr.rpartition(":")
    uvicorn.run(create_app(service), host=host or "127.0.0.1",
                port=int(port), log_level="warning")


@main.command()
@click.argument("scenario")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_json", default=None,
              help="Scenario config overrides as a JSON object.")
def sample(scenario: str, seed: int, config_json: str | None) -> None:
    """Print a scenario's population and relation graph as JSON."""
    config = dict(json.loads(config_json)) if config_json else {}
    config["seed"] = seed
    try:
        built = build_scenario(scenario, config)
    except OneSimError as exc:
        _fail(exc)
    doc = {
        "scenario": built.name,
        "seed": built.seed,
        "max_rounds": built.max_rounds,
        "agents": [p.to_dict() for p in
                   sorted(built.profiles, key=lambda p: p.agent_id)],
        "relations": built.relations.edges if built.relations else [],
        "env_vars": built.env_vars,
    }
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


@main.command(name="scenarios")
def list_scenarios() -> None:
    """List the registered scenario names."""
    for name in scenario_names():
        click.echo(name)


if __name__ == "__main__":
    sys.exit(main())
