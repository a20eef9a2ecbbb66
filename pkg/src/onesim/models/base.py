"""Decision interface.

Every way an agent can make up its mind — scripted rule, remote model,
wrapped variants — implements one async method: decide(request) -> response.
Simulation state stays outside; a backend sees only what the request carries
and must not reach into the run.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Protocol, runtime_checkable

from ..errors import ConfigurationError, PayloadTypeError
from ..graph import VariableSpec

PURPOSES = ("domain", "chat", "sample")


@dataclass(frozen=True)
class DecisionRequest:
    prompt: str
    agent_id: str
    node_id: str
    round_stamp: int
    expected_outputs: tuple[VariableSpec, ...] = ()
    purpose: str = "domain"
    # Carrier for rule backends: the live RuleContext rides here so scripted
    # handlers can see the payload and rng stream the prompt text describes.
    context: Mapping[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.purpose not in PURPOSES:
            raise ConfigurationError("unknown request purpose %r" % (self.purpose,))
        if self.purpose == "domain" and not self.expected_outputs:
            raise ConfigurationError(
                "domain decision for node %r declares no expected outputs"
                % (self.node_id,))
        if self.round_stamp < 0:
            raise ConfigurationError("round_stamp must not be negative")


@dataclass(frozen=True)
class DecisionResponse:
    raw: str
    parsed: dict[str, Any]
    latency_s: float = 0.0


def check_outputs(parsed: Mapping[str, Any],
                  expected: tuple[VariableSpec, ...]) -> dict[str, Any]:
    """Verify every expected output is present with the right type. Keys
    starting with '_' are routing hints, passed through unchecked. Returns
    the parsed mapping as a plain dict."""
    problems = []
    for spec in expected:
        if spec.name not in parsed:
            problems.append("missing output %r" % spec.name)
        elif not spec.accepts(parsed[spec.name]):
            problems.append(
                "output %r should be %s, got %s"
                % (spec.name, spec.data_type, type(parsed[spec.name]).__name__))
    if problems:
        raise PayloadTypeError("; ".join(problems))
    return dict(parsed)


@runtime_checkable
class DecisionBackend(Protocol):
    async def decide(self, request: DecisionRequest) -> DecisionResponse: ...
