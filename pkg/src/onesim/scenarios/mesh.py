"""Bulk-traffic scenario: every peer pings all its neighbors each round.

Meant for load, placement and conservation work rather than for modeling
anything.  Payloads are a pure function of (agent, round), so two runs of
the same config must produce the same event multiset no matter how the
agents are spread over workers.  The default relation topology is a ring
lattice with a few long chords, which is deterministic, cheap to build at
any size, and keeps most edges local under a contiguous partition while the
chords guarantee some cross-partition traffic."""
from __future__ import annotations

from ..agents.profile import AgentProfile
from ..environment import EnvState
from ..errors import ConfigurationError
from ..graph import load_graph, validate_structure
from ..resources import graph_asset
from ..runtime.envelope import ENV_SOURCE, KIND_START, EventEnvelope
from ..scenario.relations import RelationGraph, sample_valid_relations
from ..scenario.schema import RelationRule, RelationSchema
from .base import ScenarioDef, register


def _pulse_rule(ctx) -> dict:
    peers = ctx.directory.neighbors(ctx.agent_id)
    tick = ctx.env.get("pulse_round") if ctx.env is not None else ctx.round_stamp
    return {
        "note": "pulse r%03d from %s" % (tick, ctx.agent_id),
        "_targets": {"PingEvent": peers},
        "_emit": {"PingEvent": bool(peers)},
    }


def _absorb_rule(ctx) -> dict:
    return {"seen": "%s took %s" % (ctx.agent_id, ctx.payload["note"])}


def _chat(ctx, question: str) -> str:
    return "Peer %s, %d links." % (
        ctx.agent_id, len(ctx.directory.neighbors(ctx.agent_id)))


def _lattice(ids: list[str], degree: int, long_every: int) -> RelationGraph:
    """Ring lattice: each peer linked to its degree/2 nearest on both sides,
    plus a chord from every long_every-th peer to roughly the far side."""
    n = len(ids)
    rel = RelationGraph(list(ids))
    seen: set[tuple[str, str]] = set()

    def add(i: int, j: int) -> None:
        a, b = ids[i % n], ids[j % n]
        if a == b:
            return
        key = (a, b) if a < b else (b, a)
        if key in seen:
            return
        seen.add(key)
        rel.add_edge(key[0], key[1], "link", directed=False)

    half = max(1, degree // 2)
    for i in range(n):
        for d in range(1, half + 1):
            add(i, i + d)
    if long_every > 0:
        for i in range(0, n, long_every):
            # The small offset keeps the chords from all landing on the
            # same far-side peers when long_every divides n.
            add(i, i + n // 2 + (i % 7))
    return rel


@register("mesh")
def build(config: dict) -> ScenarioDef:
    n_agents = int(config.get("n_agents", 12))
    seed = int(config.get("seed", 0))
    max_rounds = int(config.get("max_rounds", 3))
    degree = int(config.get("degree_target", 6))
    topology = str(config.get("topology", "lattice"))
    long_every = int(config.get("long_every", 10))
    if n_agents < 2:
        raise ConfigurationError("mesh needs at least 2 peers")

    graph = load_graph(graph_asset("mesh"))
    validate_structure(graph)
    profiles = [AgentProfile("peer_%04d" % i, "Peer", {"name": "peer-%d" % i})
                for i in range(n_agents)]
    agent_ids = [p.agent_id for p in profiles]

    if topology == "lattice":
        relations = _lattice(agent_ids, degree, long_every)
    elif topology == "random":
        schema = RelationSchema(pairs=(
            RelationRule("Peer", "Peer", "link", False, float(degree)),))
        relations = sample_valid_relations(schema, profiles, graph, seed)
    else:
        raise ConfigurationError(
            "topology must be 'lattice' or 'random', got %r" % topology)

    def start_events(env: EnvState, round_stamp: int) -> list[EventEnvelope]:
        env.set("pulse_round", round_stamp)
        return [EventEnvelope(
            event_name="RoundStartEvent", source=ENV_SOURCE,
            targets=list(agent_ids), payload={},
            round_stamp=round_stamp, kind=KIND_START)]

    return ScenarioDef(
        name="mesh", seed=seed, max_rounds=max_rounds,
        graph=graph, profiles=profiles,
        rules={"pulse": _pulse_rule, "absorb": _absorb_rule},
        start_events=start_events,
        env_vars={"pulse_round": 0},
        relations=relations,
        chat_rule=_chat,
        config={"n_agents": n_agents, "max_rounds": max_rounds, "seed": seed,
                "degree_target": degree, "topology": topology,
                "long_every": long_every})
