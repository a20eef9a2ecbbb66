"""Tuning dataset files.

Quadruplets export as UTF-8 newline-delimited JSON in two flavors that
keep different columns: supervised rows pair the prompt with the corrected
response only, preference rows keep both responses plus the score. File
suffixes are part of the contract: `.sft.jsonl` and `.rl.jsonl`.
"""
from __future__ import annotations

import json
from pathlib import Path

from ..errors import ConfigurationError, EmptySetError
from .records import Quadruplet

DATASET_KINDS = ("sft", "rl")
SUFFIXES = {"sft": ".sft.jsonl", "rl": ".rl.jsonl"}


def dataset_row(quad: Quadruplet, kind: str) -> dict:
    if kind == "sft":
        return {"prompt": quad.prompt, "response": quad.refined}
    if kind == "rl":
        return {"prompt": quad.prompt, "rejected": quad.response,
                "chosen": quad.refined, "score": quad.score}
    raise ConfigurationError(
        "unknown dataset kind %r (one of %s)" % (kind, ", ".join(DATASET_KINDS)))


def _infer_kind(path: Path) -> str:
    for kind, suffix in SUFFIXES.items():
        if path.name.endswith(suffix):
            return kind
    raise ConfigurationError(
        "cannot tell the dataset kind from %r; use one of the %s suffixes "
        "or pass kind explicitly" % (path.name, "/".join(SUFFIXES.values())))


def export_dataset(quads: list[Quadruplet], path: str | Path,
                   kind: str | None = None) -> Path:
    path = Path(path)
    if kind is None:
        kind = _infer_kind(path)
    if not quads:
        raise EmptySetError("no quadruplets to export")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for quad in quads:
            fh.write(json.dumps(dataset_row(quad, kind)) + "\n")
    return path


def export_datasets(quads: list[Quadruplet], out_dir: str | Path,
                    stem: str = "feedback") -> dict[str, Path]:
    """Write both flavors side by side, named <stem>.sft.jsonl and
    <stem>.rl.jsonl."""
    out = Path(out_dir)
    return {kind: export_dataset(quads, out / (stem + SUFFIXES[kind]), kind)
            for kind in DATASET_KINDS}


def load_dataset(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
