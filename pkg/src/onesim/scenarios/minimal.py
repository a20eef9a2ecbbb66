"""Smallest useful scenario: a handful of relay agents acknowledge each
round's start and, on the last round, hand the run back to the environment."""
from __future__ import annotations

from ..environment import EnvState
from ..agents.profile import AgentProfile
from ..graph import load_graph, validate_structure
from ..resources import graph_asset
from ..runtime.envelope import ENV_SOURCE, KIND_START, EventEnvelope
from .base import ScenarioDef, register


def _relay_rule(ctx) -> dict:
    return {
        "count": ctx.round_stamp + 1,
        "_emit": {"RelayDoneEvent": bool(ctx.payload.get("is_final", False))},
    }


def _chat(ctx, question: str) -> str:
    return "Relay %s here; %d rounds seen so far." % (
        ctx.agent_id, ctx.round_stamp + 1)


@register("minimal")
def build(config: dict) -> ScenarioDef:
    n_agents = int(config.get("n_agents", 3))
    seed = int(config.get("seed", 0))
    max_rounds = int(config.get("max_rounds", 3))
    graph = load_graph(graph_asset("minimal"))
    validate_structure(graph)
    profiles = [AgentProfile("node_%04d" % i, "Node", {"label": "relay-%d" % i})
                for i in range(n_agents)]
    agent_ids = [p.agent_id for p in profiles]

    def start_events(env: EnvState, round_stamp: int) -> list[EventEnvelope]:
        is_final = round_stamp == max_rounds - 1
        env.set("final_round", is_final)
        return [EventEnvelope(
            event_name="RoundStartEvent", source=ENV_SOURCE,
            targets=list(agent_ids), payload={"is_final": is_final},
            round_stamp=round_stamp, kind=KIND_START)]

    return ScenarioDef(
        name="minimal", seed=seed, max_rounds=max_rounds,
        graph=graph, profiles=profiles,
        rules={"relay": _relay_rule},
        start_events=start_events,
        env_vars={"final_round": False},
        end_event="RelayDoneEvent",
        chat_rule=_chat,
        config={"n_agents": n_agents, "max_rounds": max_rounds, "seed": seed})
