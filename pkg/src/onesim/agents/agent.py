"""The general agent: graph-driven dispatch over a pluggable decision core.

An agent owns a profile, a memory store, and a set of handler bindings, one
per behavior-graph node of its type. When an envelope arrives, the node is
found by event name, the bound decision runs (scripted rule or rendered
prompt against a model), and the node's outgoing edges turn the decision's
outputs into new envelopes.

Decisions steer emission with two reserved output keys:

  _emit:    {event_name: bool}   force or suppress an outgoing edge
  _targets: {event_name: [ids]}  explicit recipients for an edge

Without hints, unconditional edges fire and conditional ones stay quiet,
and recipients default to related agents of the destination node's type
(every agent of that type when no relation link exists).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from ..errors import (
    ConfigurationError,
    EmptyPopulationError,
    NoBindingError,
    OneSimError,
    PayloadTypeError,
    UnknownAgentError,
)
from ..graph import BehaviorGraph
from ..models.base import DecisionBackend, DecisionRequest
from ..rngkit import DetStream, stream_seed
from ..runtime.envelope import ENV_SOURCE, KIND_BROADCAST, EventEnvelope
from .memory import MemoryConfig, MemoryStore
from .planning import PlanningStrategy
from .profile import AgentProfile


class Directory:
    """Who exists and who relates to whom. Shared by every agent in a run;
    observation goes through here so private attributes cannot leak."""

    def __init__(self):
        self._profiles: dict[str, AgentProfile] = {}
        self._links: dict[str, dict[str, set[str]]] = {}
        self._by_type: dict[str, list[str]] = {}

    def add_profile(self, profile: AgentProfile) -> None:
        known = profile.agent_id in self._profiles
        self._profiles[profile.agent_id] = profile
        if not known:
            self._by_type.setdefault(profile.agent_type, []).append(profile.agent_id)
            self._by_type[profile.agent_type].sort()

    def link(self, src: str, dst: str, name: str = "knows",
             directed: bool = False) -> None:
        for a in (src, dst):
            if a not in self._profiles:
                raise UnknownAgentError(a)
        self._links.setdefault(src, {}).setdefault(name, set()).add(dst)
        if not directed:
            self._links.setdefault(dst, {}).setdefault(name, set()).add(src)

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self._profiles

    def __len__(self) -> int:
        return len(self._profiles)

    def agent_ids(self) -> list[str]:
        return sorted(self._profiles)

    def type_of(self, agent_id: str) -> str:
        if agent_id not in self._profiles:
            raise UnknownAgentError(agent_id)
        return self._profiles[agent_id].agent_type

    def ids_of_type(self, agent_type: str) -> list[str]:
        return list(self._by_type.get(agent_type, []))

    def neighbors(self, agent_id: str, relation: str | None = None) -> list[str]:
        links = self._links.get(agent_id, {})
        if relation is not None:
            return sorted(links.get(relation, ()))
        out: set[str] = set()
        for peers in links.values():
            out |= peers
        return sorted(out)

    def observe(self, agent_id: str) -> dict[str, Any]:
        if agent_id not in self._profiles:
            raise UnknownAgentError(agent_id)
        return self._profiles[agent_id].observe_view()


@dataclass(frozen=True)
class HandlerBinding:
    node_id: str
    handler_kind: str  # "rule" | "model-backed"
    rule_name: str | None = None
    planning: PlanningStrategy | None = None

    def __post_init__(self) -> None:
        if self.handler_kind == "rule":
            if self.rule_name is None:
                raise ConfigurationError(
                    "rule binding for %r needs rule_name" % (self.node_id,))
        elif self.handler_kind == "model-backed":
            if self.planning is None:
                raise ConfigurationError(
                    "model-backed binding for %r needs a planning strategy"
                    % (self.node_id,))
        else:
            raise ConfigurationError(
                "handler_kind must be 'rule' or 'model-backed', got %r"
                % (self.handler_kind,))


@dataclass
class RuleContext:
    """Everything a scripted handler may look at. The stream is the only
    sanctioned randomness; it is derived per (agent, round, node), so the
    same decision replays identically wherever the agent is hosted."""

    agent_id: str
    agent_type: str
    node_id: str
    event_name: str
    source: str
    round_stamp: int
    payload: dict[str, Any]
    profile: AgentProfile
    memory: MemoryStore
    stream: DetStream
    directory: Directory
    env: Any = None

    def observe(self, other_id: str) -> dict[str, Any]:
        return self.directory.observe(other_id)


class GeneralAgent:
    def __init__(self, profile: AgentProfile, graph: BehaviorGraph,
                 bindings: dict[str, HandlerBinding],
                 backend: DecisionBackend, seed: int,
                 directory: Directory,
                 env=None,
                 memory_config: MemoryConfig | None = None,
                 collector: Callable[["GeneralAgent"], dict] | None = None,
                 on_profile_change: Callable[[str, str, Any], None] | None = None):
        self.profile = profile
        self.graph = graph
        self.backend = backend
        self.seed = seed
        self.directory = directory
        self.env = env
        self.memory = MemoryStore(memory_config)
        self.collector = collector
        self.on_profile_change = on_profile_change
        self.current_round = 0

        my_type = profile.agent_type
        my_nodes = {nid for nid, node in graph.nodes.items()
                    if node.agent_type == my_type}
        missing = my_nodes - set(bindings)
        if missing:
            raise NoBindingError(sorted(missing)[0])
        self.bindings = {nid: b for nid, b in bindings.items() if nid in my_nodes}

        # Event name -> node of my type it activates. One event name may
        # activate at most one node per agent type; anything else would make
        # dispatch depend on edge order.
        self._dispatch: dict[str, str] = {}
        for edge in graph.edges:
            dest = graph.nodes[edge.dest_node_id]
            if dest.agent_type != my_type:
                continue
            prior = self._dispatch.get(edge.event_name)
            if prior is not None and prior != edge.dest_node_id:
                raise ConfigurationError(
                    "event %r would activate both %r and %r for type %s"
                    % (edge.event_name, prior, edge.dest_node_id, my_type))
            self._dispatch[edge.event_name] = edge.dest_node_id

    @property
    def agent_id(self) -> str:
        return self.profile.agent_id

    def subscribed_names(self) -> set[str]:
        return set(self._dispatch)

    def observe(self, other_id: str) -> dict[str, Any]:
        return self.directory.observe(other_id)

    def update_profile(self, attr: str, value: Any,
                       visibility: str | None = None) -> AgentProfile:
        self.profile.update(attr, value, visibility)
        if self.on_profile_change is not None:
            self.on_profile_change(self.agent_id, attr, value)
        return self.profile

    # --- event handling -----------------------------------------------------

    async def handle(self, envelope: EventEnvelope) -> list[EventEnvelope]:
        self.current_round = envelope.round_stamp
        node_id = self._dispatch.get(envelope.event_name)
        if node_id is None:
            if envelope.kind == KIND_BROADCAST:
                # Announcements an agent has no action for are only noted.
                self.memory.add(
                    "heard %s: %r" % (envelope.event_name, envelope.payload),
                    envelope.round_stamp, importance=0.3)
                return []
            raise NoBindingError(envelope.event_name)
        binding = self.bindings.get(node_id)
        if binding is None:
            raise NoBindingError(node_id)

        node = self.graph.nodes[node_id]
        ctx = RuleContext(
            agent_id=self.agent_id,
            agent_type=self.profile.agent_type,
            node_id=node_id,
            event_name=envelope.event_name,
            source=envelope.source,
            round_stamp=envelope.round_stamp,
            payload=dict(envelope.payload),
            profile=self.profile,
            memory=self.memory,
            stream=DetStream(stream_seed(
                self.seed, self.agent_id, envelope.round_stamp, node_id)),
            directory=self.directory,
            env=self.env)

        request = DecisionRequest(
            prompt=self._render_prompt(binding, ctx, node),
            agent_id=self.agent_id,
            node_id=node_id,
            round_stamp=envelope.round_stamp,
            expected_outputs=tuple(node.outputs),
            context={"rule_ctx": ctx})
        response = await self.backend.decide(request)
        drafts = self._emit(node_id, envelope, response.parsed)

        self.memory.add(
            "%s: handled %s from %s, sent %s"
            % (node.action_name, envelope.event_name, envelope.source,
               ", ".join(sorted({d.event_name for d in drafts})) or "nothing"),
            envelope.round_stamp)
        return drafts

    def _render_prompt(self, binding: HandlerBinding, ctx: RuleContext,
                       node) -> str:
        if binding.handler_kind == "rule":
            return "rule:%s" % binding.rule_name
        wanted = ", ".join("%s (%s)" % (v.name, v.data_type)
                           for v in node.outputs)
        action = "%s. Produce: %s." % (node.description or node.action_name, wanted)
        context = "Round %d: received %s from %s with payload %r." % (
            ctx.round_stamp, ctx.event_name, ctx.source, ctx.payload)
        assert binding.planning is not None
        return binding.planning.render(
            profile=self.profile.render_text(),
            memory=self.memory.render_text(query=node.action_name,
                                           now_round=ctx.round_stamp),
            context=context,
            action=action)

    def _emit(self, node_id: str, envelope: EventEnvelope,
              outputs: dict[str, Any]) -> list[EventEnvelope]:
        emit_hints = outputs.get("_emit", {})
        target_hints = outputs.get("_targets", {})
        drafts: list[EventEnvelope] = []
        for edge in self.graph.out_edges(node_id):
            want = emit_hints.get(edge.event_name)
            if want is None:
                want = not edge.condition
            if not want:
                continue
            payload = {}
            for spec in edge.variables:
                if spec.name not in outputs:
                    raise PayloadTypeError(
                        "edge %s needs output %r which the decision did not produce"
                        % (edge.edge_id, spec.name))
                value = outputs[spec.name]
                if not spec.accepts(value):
                    raise PayloadTypeError(
                        "edge %s variable %r should be %s, got %s"
                        % (edge.edge_id, spec.name, spec.data_type,
                           type(value).__name__))
                payload[spec.name] = value
            targets = target_hints.get(edge.event_name)
            if targets is None:
                targets = self._default_targets(edge.dest_node_id)
            drafts.append(EventEnvelope(
                event_name=edge.event_name,
                source=self.agent_id,
                targets=list(targets),
                payload=payload,
                round_stamp=envelope.round_stamp))
        return drafts

    def _default_targets(self, dest_node_id: str) -> list[str]:
        dest = self.graph.nodes[dest_node_id]
        if dest_node_id == self.graph.end_node_id:
            return [ENV_SOURCE]
        related = [a for a in self.directory.neighbors(self.agent_id)
                   if self.directory.type_of(a) == dest.agent_type]
        if related:
            return related
        everyone = self.directory.ids_of_type(dest.agent_type)
        if not everyone:
            raise EmptyPopulationError(
                "no agents of type %r to receive events for node %r"
                % (dest.agent_type, dest_node_id))
        return everyone

    # --- out-of-band --------------------------------------------------------

    async def answer_chat(self, question: str) -> str:
        """Interview reply. Never touches memory; an interview is a probe,
        not an experience."""
        ctx = RuleContext(
            agent_id=self.agent_id,
            agent_type=self.profile.agent_type,
            node_id="",
            event_name="InterviewEvent",
            source=ENV_SOURCE,
            round_stamp=self.current_round,
            payload={"question": question},
            profile=self.profile,
            memory=self.memory,
            stream=DetStream(stream_seed(
                self.seed, self.agent_id, self.current_round, "chat")),
            directory=self.directory,
            env=self.env)
        # Model-backed agents get the question through their planning
        # template; scripted agents see the bare question via the chat rule.
        prompt = question
        strategy = next((b.planning for b in self.bindings.values()
                         if b.planning is not None), None)
        if strategy is not None:
            prompt = strategy.render(
                profile=self.profile.render_text(),
                memory=self.memory.render_text(query=question,
                                               now_round=self.current_round),
                context="Interview question: %s" % question,
                action="Answer the interviewer directly, in plain text.")
        request = DecisionRequest(
            prompt=prompt, agent_id=self.agent_id, node_id="",
            round_stamp=self.current_round, purpose="chat",
            context={"rule_ctx": ctx})
        try:
            response = await self.backend.decide(request)
        except OneSimError:
            picks = self.memory.retrieve(question, k=3,
                                         now_round=self.current_round)
            recent = "; ".join(r.content for r in picks)
            return "I am %s, a %s. %s" % (
                self.agent_id, self.profile.agent_type,
                recent or "Nothing notable has happened yet.")
        answer = response.parsed.get("answer")
        return answer if isinstance(answer, str) else response.raw

    def collect_payload(self) -> dict:
        if self.collector is not None:
            return self.collector(self)
        return {
            "agent_id": self.agent_id,
            "agent_type": self.profile.agent_type,
            "public": self.profile.observe_view(),
            "memory_size": len(self.memory),
        }
