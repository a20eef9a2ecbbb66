"""Per-agent memory.

Two eviction strategies share one store. The sliding window keeps the most
recent `window_size` records and drops the rest. The long/short-term variant
keeps the same bound but evicts the record that scores lowest under the
retrieval formula, so an old-but-important record can outlive newer noise.

Retrieval ranks by a three-part score: importance, recency (exponential
decay in rounds), and relevance (token-overlap ratio against the query when
no embedding backend is wired in). Ties break toward the newer record.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ConfigurationError

STRATEGIES = ("sliding-window", "long-short-term")


@dataclass(frozen=True)
class MemoryRecord:
    record_id: int
    round_stamp: int
    content: str
    importance: float = 0.5
    embedding_key: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.importance <= 1.0:
            raise ConfigurationError(
                "importance must lie in [0, 1], got %r" % (self.importance,))


@dataclass(frozen=True)
class MemoryConfig:
    strategy: str = "sliding-window"
    window_size: int = 64
    retrieval_top_k: int = 5
    recency_half_life: float = 10.0
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigurationError("unknown memory strategy %r" % (self.strategy,))
        if self.window_size < 1:
            raise ConfigurationError("window_size must be at least 1")
        if self.retrieval_top_k < 1:
            raise ConfigurationError("retrieval_top_k must be at least 1")
        if self.recency_half_life <= 0:
            raise ConfigurationError("recency_half_life must be positive")


def token_overlap(query: str, content: str) -> float:
    """Fallback relevance: |query tokens ∩ content tokens| / |query tokens|."""
    q = set(query.lower().split())
    if not q:
        return 0.0
    c = set(content.lower().split())
    return len(q & c) / len(q)


class MemoryStore:
    def __init__(self, config: MemoryConfig | None = None):
        self.config = config or MemoryConfig()
        self.records: list[MemoryRecord] = []
        self._next_id = 0

    def __len__(self) -> int:
        return len(self.records)

    def score(self, record: MemoryRecord, query: str, now_round: int) -> float:
        w_imp, w_rec, w_rel = self.config.weights
        age = max(0, now_round - record.round_stamp)
        recency = math.exp(-age / self.config.recency_half_life)
        return (w_imp * record.importance
                + w_rec * recency
                + w_rel * token_overlap(query, record.content))

    def add(self, content: str, round_stamp: int, importance: float = 0.5,
            embedding_key: str | None = None) -> MemoryRecord:
        record = MemoryRecord(self._next_id, round_stamp, content,
                              importance, embedding_key)
        self._next_id += 1
        self.records.append(record)
        self.forget(now_round=round_stamp)
        return record

    def retrieve(self, query: str, k: int | None = None,
                 now_round: int | None = None) -> list[MemoryRecord]:
        if not self.records:
            return []
        k = self.config.retrieval_top_k if k is None else k
        now = self.records[-1].round_stamp if now_round is None else now_round
        ranked = sorted(
            self.records,
            key=lambda r: (-self.score(r, query, now), -r.round_stamp, -r.record_id))
        return ranked[:k]

    def forget(self, now_round: int) -> list[MemoryRecord]:
        """Evict until the store fits its window; returns what was dropped."""
        dropped: list[MemoryRecord] = []
        while len(self.records) > self.config.window_size:
            if self.config.strategy == "sliding-window":
                dropped.append(self.records.pop(0))
            else:
                # Lowest score goes first; among equals the older record.
                victim = min(
                    self.records,
                    key=lambda r: (self.score(r, "", now_round), r.round_stamp, r.record_id))
                self.records.remove(victim)
                dropped.append(victim)
        return dropped

    def merge(self) -> int:
        """Collapse records with identical content, keeping the earliest and
        the highest importance seen. Returns how many were removed."""
        by_content: dict[str, MemoryRecord] = {}
        order: list[str] = []
        for rec in self.records:
            kept = by_content.get(rec.content)
            if kept is None:
                by_content[rec.content] = rec
                order.append(rec.content)
            elif rec.importance > kept.importance:
                by_content[rec.content] = MemoryRecord(
                    kept.record_id, kept.round_stamp, kept.content,
                    rec.importance, kept.embedding_key)
        removed = len(self.records) - len(order)
        self.records = [by_content[c] for c in order]
        return removed

    def reflect(self, summarize, now_round: int) -> MemoryRecord:
        """Condense current records into one summary via the caller-supplied
        summarizer (normally a decision-model call). The summary enters the
        store like any other record, at high importance."""
        text = summarize([r.content for r in self.records])
        return self.add(text, now_round, importance=0.9)

    def render_text(self, query: str = "", now_round: int | None = None) -> str:
        picks = self.retrieve(query, now_round=now_round)
        if not picks:
            return "(no relevant memories)"
        return "\n".join("[round %d] %s" % (r.round_stamp, r.content)
                         for r in sorted(picks, key=lambda r: r.record_id))

    # --- portability ---------------------------------------------------------

    def dump(self) -> list[dict]:
        """Serializable copy of the store, for shipping an agent elsewhere."""
        return [{"record_id": r.record_id, "round_stamp": r.round_stamp,
                 "content": r.content, "importance": r.importance,
                 "embedding_key": r.embedding_key}
                for r in self.records]

    def restore(self, rows: list[dict]) -> None:
        """Replace contents with a dump(); id numbering continues past it."""
        self.records = [MemoryRecord(**row) for row in rows]
        self._next_id = 1 + max((r.record_id for r in self.records), default=-1)
