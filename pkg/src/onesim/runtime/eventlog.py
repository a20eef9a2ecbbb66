"""Event log: newline-delimited JSON, one envelope per line.

Each line starts with a fixed-width ``sort_key`` field, so a plain
lexicographic sort of the raw lines orders envelopes by
(round_stamp, source, seq). Sources are left-justified space-padded, which
keeps the composed key's order identical to tuple comparison on the parts
(space sorts below every printable id character).

The auditors at the bottom are the run's standing obligations: the round
barrier (all round-r completions logged before any round r+1 envelope) and
exactly-once delivery.
"""
from __future__ import annotations

import json
from pathlib import Path

from .envelope import KIND_COMPLETION, KIND_TERMINATE, EventEnvelope

SOURCE_WIDTH = 32


def sort_key(round_stamp: int, source: str, seq: int) -> str:
    if len(source) > SOURCE_WIDTH:
        raise ValueError(f"source id too long for log key: {source!r}")
    return f"{round_stamp:08d}|{source:<{SOURCE_WIDTH}}|{seq:08d}"


def log_line(env: EventEnvelope) -> str:
    doc = {"sort_key": sort_key(env.round_stamp, env.source, env.seq or 0)}
    doc.update(env.to_dict())
    return json.dumps(doc, separators=(",", ":"))


class EventLog:
    """Append-only log of published envelopes, optionally mirrored to disk."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._lines: list[str] = []
        self._fh = open(self.path, "w", encoding="utf-8") if self.path else None
        self._sealed = False

    def append(self, env: EventEnvelope) -> None:
        if self._sealed:
            raise ValueError("log is sealed")
        line = log_line(env)
        self._lines.append(line)
        if self._fh:
            self._fh.write(line + "\n")

    def seal(self, dropped: list[str] | None = None) -> None:
        """Close the log; record envelopes dropped at termination, if any."""
        if self._sealed:
            return
        self._sealed = True
        if dropped:
            note = json.dumps({"dropped_at_termination": sorted(dropped)},
                              separators=(",", ":"))
            self._lines.append(note)
            if self._fh:
                self._fh.write(note + "\n")
        if self._fh:
            self._fh.close()
            self._fh = None

    @property
    def sealed(self) -> bool:
        return self._sealed

    def lines(self) -> list[str]:
        return list(self._lines)

    def sorted_lines(self) -> list[str]:
        return sorted(self._lines)

    def envelopes(self) -> list[dict]:
        out = []
        for line in self._lines:
            doc = json.loads(line)
            if "event_id" in doc:
                out.append(doc)
        return out

    def __len__(self) -> int:
        return len(self._lines)


def parse_log_file(path: str | Path) -> list[dict]:
    docs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            docs.append(json.loads(line))
    return docs


# --- auditors ---------------------------------------------------------------

def audit_round_barrier(docs: list[dict]) -> list[str]:
    """Check the completion barrier over one log's append order.

    For every round r that produced completion envelopes, no envelope
    stamped r+1 (or later) may precede the last round-r completion in the
    log. Returns human-readable violations; empty means the barrier held.
    Terminate markers are exempt (they can race the tail of a stopped run).
    """
    last_completion_pos: dict[int, int] = {}
    rows: list[tuple[int, int, str]] = []  # (pos, round, event_id), non-completions
    for pos, doc in enumerate(docs):
        if "event_id" not in doc:
            continue
        r = doc["round_stamp"]
        if doc["kind"] == KIND_COMPLETION:
            last_completion_pos[r] = pos
        elif doc["kind"] != KIND_TERMINATE:
            rows.append((pos, r, doc["event_id"]))

    violations = []
    for r, comp_pos in sorted(last_completion_pos.items()):
        for pos, row_round, event_id in rows:
            if row_round > r and pos < comp_pos:
                violations.append(
                    f"round {row_round} envelope {event_id} at line {pos} precedes "
                    f"last round-{r} completion at line {comp_pos}")
                break
    return violations


def audit_exactly_once(published: list[dict], deliveries: list[dict],
                       dropped: set[str] | None = None) -> list[str]:
    """Delivered exactly once per (event_id, target); nothing lost, nothing
    duplicated, nothing delivered that was never published.

    ``deliveries`` rows need event_id and target keys. Targets that were
    never subscribed are outside the obligation, so loss is only checked
    against the delivery ledger's own expectations: callers pass the full
    published set and the auditor reports published-but-never-delivered ids
    that are not in ``dropped`` and addressed at least one concrete target.
    """
    dropped = dropped or set()
    seen: dict[tuple[str, str], int] = {}
    published_ids = {doc["event_id"] for doc in published}
    problems = []
    for row in deliveries:
        key = (row["event_id"], row["target"])
        seen[key] = seen.get(key, 0) + 1
        if row["event_id"] not in published_ids:
            problems.append(f"delivered but never published: {key}")
    for key, count in seen.items():
        if count > 1:
            problems.append(f"duplicate delivery x{count}: {key}")
    delivered_ids = {row["event_id"] for row in deliveries}
    for doc in published:
        eid = doc["event_id"]
        if eid in delivered_ids or eid in dropped:
            continue
        if doc["kind"] == KIND_TERMINATE or not doc.get("targets"):
            continue
        problems.append(f"published but never delivered: {eid}")
    return problems
