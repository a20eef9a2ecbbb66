"""Scenario definitions: everything a run needs, bundled.

A scenario module registers a builder; the builder takes a config dict and
returns a ScenarioDef holding the behavior graph, the population, scripted
rules for every bound node, the environment program (start events and the
round-end hook), and bookkeeping like the end-event name.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from ..agents.profile import AgentProfile
from ..environment import EnvState
from ..errors import ConfigurationError
from ..graph import BehaviorGraph
from ..runtime.envelope import EventEnvelope
from ..scenario.relations import RelationGraph

StartFn = Callable[[EnvState, int], list[EventEnvelope]]
RoundEndFn = Callable[[EnvState, int], "dict | None"]
RuleFn = Callable[[Any], dict]


@dataclass
class ScenarioDef:
    name: str
    seed: int
    max_rounds: int
    graph: BehaviorGraph
    profiles: list[AgentProfile]
    rules: dict[str, RuleFn]
    start_events: StartFn
    env_vars: dict[str, Any] = field(default_factory=dict)
    relations: RelationGraph | None = None
    on_run_start: Callable[[EnvState], "dict | None"] | None = None
    on_round_end: RoundEndFn | None = None
    end_event: str | None = None
    chat_rule: Callable[[Any, str], str] | None = None
    collector: Callable[[Any], dict] | None = None
    config: dict[str, Any] = field(default_factory=dict)


_BUILDERS: dict[str, Callable[[dict], ScenarioDef]] = {}


def register(name: str):
    def decorate(builder: Callable[[dict], ScenarioDef]):
        _BUILDERS[name] = builder
        return builder
    return decorate


def scenario_names() -> list[str]:
    return sorted(_BUILDERS)


def build_scenario(name: str, config: dict | None = None) -> ScenarioDef:
    if name not in _BUILDERS:
        raise ConfigurationError(
            "unknown scenario %r (have: %s)" % (name, ", ".join(scenario_names())))
    return _BUILDERS[name](dict(config or {}))
