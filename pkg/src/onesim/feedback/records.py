"""Records that flow through the feedback path.

A decision leaves behind a prompt/response pair; scoring and refinement
turn the weak ones into quadruplets ready for tuning datasets. The capture
sink here is what `models.with_capture` feeds.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigurationError, InvalidRangeError
from ..graph import VariableSpec

SCORE_MIN = 1.0
SCORE_MAX = 5.0


def check_score(value) -> float:
    score = float(value)
    if not SCORE_MIN <= score <= SCORE_MAX:
        raise InvalidRangeError(
            "score %r is outside [%g, %g]" % (value, SCORE_MIN, SCORE_MAX))
    return score


@dataclass(frozen=True)
class Sample:
    """One captured prompt/response pair with enough metadata to know who
    produced it and what outputs the response was supposed to carry."""

    prompt: str
    response: str
    agent_id: str
    node_id: str
    round_stamp: int
    ok: bool = True
    expected_outputs: tuple[VariableSpec, ...] = ()

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ConfigurationError("a sample needs a nonempty prompt")

    def to_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "response": self.response,
            "agent_id": self.agent_id,
            "node_id": self.node_id,
            "round_stamp": self.round_stamp,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class Quadruplet:
    """A scored pair plus its correction. Only pairs scoring below the
    pipeline threshold become quadruplets; the pipeline and the review
    queue are the only writers, and both enforce that."""

    prompt: str
    response: str
    score: float
    refined: str
    rationale: str

    def __post_init__(self) -> None:
        check_score(self.score)
        if not self.refined:
            raise ConfigurationError(
                "a quadruplet needs a nonempty refined response")


@dataclass(frozen=True)
class FailedRefinement:
    """A below-threshold pair the refiner could not fix. Kept so the books
    balance, never exported."""

    sample: Sample
    score: float
    rationale: str
    reason: str


class CaptureSink:
    """Accumulates one Sample per decision.

    Appends happen from handler tasks sharing one event loop, so plain
    list appends are safe; there is no cross-thread use.
    """

    def __init__(self) -> None:
        self.samples: list[Sample] = []

    def record(self, *, request, raw, parsed, ok, latency_s) -> None:
        self.samples.append(Sample(
            prompt=request.prompt,
            response=raw,
            agent_id=request.agent_id,
            node_id=request.node_id,
            round_stamp=request.round_stamp,
            ok=ok,
            expected_outputs=tuple(request.expected_outputs)))

    def take(self) -> list[Sample]:
        """Hand over everything captured so far and start fresh."""
        drained, self.samples = self.samples, []
        return drained

    def __len__(self) -> int:
        return len(self.samples)
