"""Gossip ring: every person greets one acquaintance per round, the
acquaintance acknowledges, and the greeting side notes the reply."""
from __future__ import annotations

from ..agents.profile import AgentProfile
from ..environment import EnvState
from ..graph import load_graph, validate_structure
from ..resources import graph_asset
from ..runtime.envelope import ENV_SOURCE, KIND_START, EventEnvelope
from ..scenario.relations import RelationGraph, sample_valid_relations
from ..scenario.schema import RelationRule, RelationSchema
from .base import ScenarioDef, register

_TOPICS = ("the harvest", "the weather", "the neighbors", "the market")


def _greet_rule(ctx) -> dict:
    peers = ctx.directory.neighbors(ctx.agent_id) or \
        [a for a in ctx.directory.ids_of_type("Person") if a != ctx.agent_id]
    pick = ctx.stream.choice(peers)
    topic = ctx.stream.choice(list(_TOPICS))
    message = "%s wants to talk about %s" % (ctx.agent_id, topic)
    return {"message": message, "_targets": {"GreetEvent": [pick]}}


def _ack_rule(ctx) -> dict:
    reply = "%s heard %r" % (ctx.agent_id, ctx.payload["message"])
    return {"reply": reply, "_targets": {"AckEvent": [ctx.source]}}


def _receive_ack_rule(ctx) -> dict:
    heard = ctx.agent_id in ctx.payload["reply"]
    final = bool(ctx.env.get("final_round")) if ctx.env is not None else False
    return {"heard": heard, "_emit": {"GossipDoneEvent": final}}


def _chat(ctx, question: str) -> str:
    recent = ctx.memory.retrieve(question, k=2, now_round=ctx.round_stamp)
    tail = "; ".join(r.content for r in recent) or "nothing yet"
    return "%s speaking. Lately: %s." % (ctx.agent_id, tail)


@register("gossip")
def build(config: dict) -> ScenarioDef:
    n_people = int(config.get("n_people", 6))
    seed = int(config.get("seed", 0))
    max_rounds = int(config.get("max_rounds", 3))
    degree = float(config.get("degree_target", 3.0))
    graph = load_graph(graph_asset("gossip"))
    validate_structure(graph)
    profiles = [AgentProfile("person_%04d" % i, "Person",
                             {"name": "person-%d" % i})
                for i in range(n_people)]
    schema = RelationSchema(pairs=(
        RelationRule("Person", "Person", "acquaintance", False, degree),))
    # Regenerates until nobody is isolated, so every greeting has a real
    # acquaintance behind it.
    relations: RelationGraph = sample_valid_relations(
        schema, profiles, graph, seed)
    agent_ids = [p.agent_id for p in profiles]

    def start_events(env: EnvState, round_stamp: int) -> list[EventEnvelope]:
        env.set("final_round", round_stamp == max_rounds - 1)
        return [EventEnvelope(
            event_name="RoundStartEvent", source=ENV_SOURCE,
            targets=list(agent_ids), payload={},
            round_stamp=round_stamp, kind=KIND_START)]

    return ScenarioDef(
        name="gossip", seed=seed, max_rounds=max_rounds,
        graph=graph, profiles=profiles,
        rules={"greet": _greet_rule, "ack": _ack_rule,
               "receive_ack": _receive_ack_rule},
        start_events=start_events,
        env_vars={"final_round": False},
        relations=relations,
        end_event="GossipDoneEvent",
        chat_rule=_chat,
        config={"n_people": n_people, "max_rounds": max_rounds,
                "seed": seed, "degree_target": degree})
