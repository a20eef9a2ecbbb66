"""Profile sampling from schemas.

Each profile draws from its own derived rng stream, so sampling order and
population size never disturb another agent's attributes: profile i of a
given type is the same whether you sample 10 agents or 10000.
"""
from __future__ import annotations

import asyncio

from ..agents.profile import AgentProfile
from ..errors import ConfigurationError
from ..graph import VariableSpec
from ..models.base import DecisionBackend, DecisionRequest
from ..rngkit import DetStream, stream_seed
from .schema import AttrSpec, ProfileSchema


def _draw(attr: AttrSpec, stream: DetStream):
    s = attr.sampler
    if s.kind == "uniform-int":
        lo, hi = int(s.low), int(s.high)
        return lo + stream.randrange(hi - lo + 1)
    if s.kind == "uniform-float":
        return stream.uniform(float(s.low), float(s.high))
    if s.kind == "choice":
        return stream.choice(list(s.options))
    raise ConfigurationError("sampler %r is not stream-drawable" % (s.kind,))


async def _draw_model(attr: AttrSpec, agent_id: str,
                      backend: DecisionBackend):
    spec = VariableSpec(name=attr.name, data_type=attr.data_type,
                        default_value=None,
                        description="sampled attribute", source="produced")
    request = DecisionRequest(
        prompt="%s\nAgent id: %s. Reply with a fenced JSON object holding "
               "a single key %r." % (attr.sampler.prompt, agent_id, attr.name),
        agent_id=agent_id, node_id="", round_stamp=0,
        expected_outputs=(spec,), purpose="sample")
    response = await backend.decide(request)
    return response.parsed[attr.name]


def sample_profiles(schema: ProfileSchema, n: int, seed: int,
                    backend: DecisionBackend | None = None,
                    id_prefix: str | None = None) -> list[AgentProfile]:
    if n < 1:
        raise ConfigurationError("need at least one profile, got n=%d" % n)
    model_attrs = [a for a in schema.attrs if a.sampler.kind == "model-generated"]
    if model_attrs and backend is None:
        raise ConfigurationError(
            "schema for %s has model-generated attributes but no backend was given"
            % schema.agent_type)
    prefix = id_prefix if id_prefix is not None else schema.agent_type.lower() + "_"
    profiles = []
    for i in range(n):
        agent_id = "%s%04d" % (prefix, i)
        stream = DetStream(stream_seed(seed, agent_id, 0, "profile"))
        public: dict = {}
        private: dict = {}
        for attr in schema.attrs:
            if attr.sampler.kind == "model-generated":
                value = asyncio.run(_draw_model(attr, agent_id, backend))
            else:
                value = _draw(attr, stream)
            (public if attr.visibility == "public" else private)[attr.name] = value
        profiles.append(AgentProfile(agent_id, schema.agent_type, public, private))
    return profiles
