"""Job market: seekers apply to employers, employers screen and extend
offers within budget, seekers respond, employers close their books."""
from __future__ import annotations

from ..agents.profile import AgentProfile
from ..environment import EnvState
from ..graph import load_graph, validate_structure
from ..resources import graph_asset
from ..rngkit import DetStream, stream_seed
from ..runtime.envelope import ENV_SOURCE, KIND_START, EventEnvelope
from .base import ScenarioDef, register

_POSITIONS = ("engineer", "nurse", "teacher", "clerk", "analyst")


def _evaluate_rule(ctx) -> dict:
    employers = ctx.directory.ids_of_type("Employer")
    pick = ctx.stream.choice(employers)
    position = ctx.stream.choice(list(_POSITIONS))
    expected = float(round(ctx.stream.uniform(40000.0, 80000.0), 2))
    return {
        "employer": pick,
        "position": position,
        "expected_salary": expected,
        "_targets": {"JobPostingEvaluationEvent": [pick]},
    }


def _screen_rule(ctx) -> dict:
    budget = float(ctx.profile.get("budget"))
    expected = float(ctx.payload["expected_salary"])
    accept = expected <= budget
    salary = float(round(min(expected * 1.03, budget), 2))
    return {
        "accept": accept,
        "salary": salary,
        "_emit": {"JobOfferEvent": accept},
        "_targets": {"JobOfferEvent": [ctx.source]},
    }


def _respond_rule(ctx) -> dict:
    salary = float(ctx.payload["salary"])
    accepted = ctx.stream.random() < 0.8
    return {
        "accepted": accepted,
        "salary": salary,
        "_targets": {"OfferResponseEvent": [ctx.source]},
    }


def _finalize_rule(ctx) -> dict:
    hired = bool(ctx.payload["accepted"])
    final = bool(ctx.env.get("final_round")) if ctx.env is not None else False
    return {"hired": hired, "_emit": {"HiringClosedEvent": final}}


def _chat(ctx, question: str) -> str:
    role = ctx.agent_type.lower()
    recent = ctx.memory.retrieve(question, k=2, now_round=ctx.round_stamp)
    tail = "; ".join(r.content for r in recent) or "no dealings yet"
    return "As a %s: %s." % (role, tail)


@register("job_market")
def build(config: dict) -> ScenarioDef:
    n_seekers = int(config.get("n_seekers", 4))
    n_employers = int(config.get("n_employers", 2))
    seed = int(config.get("seed", 0))
    max_rounds = int(config.get("max_rounds", 3))
    graph = load_graph(graph_asset("job_market"))
    validate_structure(graph)

    profiles = []
    for i in range(n_seekers):
        profiles.append(AgentProfile(
            "jobseeker_%04d" % i, "JobSeeker",
            {"name": "seeker-%d" % i},
            {"patience": 1 + i % 3}))
    for i in range(n_employers):
        stream = DetStream(stream_seed(seed, "employer_%04d" % i, 0, "budget"))
        budget = float(round(stream.uniform(55000.0, 90000.0), 2))
        profiles.append(AgentProfile(
            "employer_%04d" % i, "Employer",
            {"name": "employer-%d" % i, "budget": budget}))

    seeker_ids = [p.agent_id for p in profiles if p.agent_type == "JobSeeker"]

    def start_events(env: EnvState, round_stamp: int) -> list[EventEnvelope]:
        env.set("final_round", round_stamp == max_rounds - 1)
        return [EventEnvelope(
            event_name="RoundStartEvent", source=ENV_SOURCE,
            targets=list(seeker_ids), payload={},
            round_stamp=round_stamp, kind=KIND_START)]

    def on_round_end(env: EnvState, round_stamp: int) -> dict:
        return {"round": round_stamp + 1,
                "collected": len(env.collected)}

    return ScenarioDef(
        name="job_market", seed=seed, max_rounds=max_rounds,
        graph=graph, profiles=profiles,
        rules={"evaluate_job_applications": _evaluate_rule,
               "screen_candidates": _screen_rule,
               "respond_to_offer": _respond_rule,
               "finalize_hiring": _finalize_rule},
        start_events=start_events,
        on_round_end=on_round_end,
        env_vars={"final_round": False},
        end_event="HiringClosedEvent",
        chat_rule=_chat,
        config={"n_seekers": n_seekers, "n_employers": n_employers,
                "max_rounds": max_rounds, "seed": seed})
