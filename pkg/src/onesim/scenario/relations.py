"""Relationship-network generation and validation.

Edges are drawn per type pair with probability chosen so the expected
degree matches the rule's degree_target. Validation enforces the two rules
a network must satisfy before a run: nobody isolated, and every agent-type
pair that exchanges events in the behavior graph has at least one concrete
relation instance to carry them.
"""
from __future__ import annotations

import json
from pathlib import Path

from ..agents.profile import AgentProfile
from ..errors import ConfigurationError
from ..graph import BehaviorGraph, ValidationReport, Violation
from ..rngkit import DetStream, stream_seed
from .schema import RelationRule, RelationSchema

ISOLATED = "isolated-agent"
NO_FLOW = "no-relation-for-flow"


class RelationGraph:
    def __init__(self, agent_ids: list[str]):
        self.agent_ids = sorted(agent_ids)
        self.edges: list[dict] = []
        self._incident: dict[str, set[str]] = {a: set() for a in self.agent_ids}

    def add_edge(self, src: str, dst: str, name: str, directed: bool) -> None:
        self.edges.append(
            {"src": src, "dst": dst, "name": name, "directed": directed})
        self._incident[src].add(dst)
        self._incident[dst].add(src)

    def neighbors(self, agent_id: str) -> list[str]:
        return sorted(self._incident.get(agent_id, ()))

    def degree(self, agent_id: str) -> int:
        return len(self._incident.get(agent_id, ()))

    def isolated(self) -> list[str]:
        return [a for a in self.agent_ids if not self._incident[a]]

    def to_dict(self) -> dict:
        return {"agents": list(self.agent_ids), "edges": list(self.edges)}

    @classmethod
    def from_dict(cls, doc: dict) -> "RelationGraph":
        graph = cls(list(doc.get("agents", [])))
        for e in doc.get("edges", []):
            graph.add_edge(e["src"], e["dst"], e.get("name", "knows"),
                           bool(e.get("directed", False)))
        return graph

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def sample_relations(schema: RelationSchema, profiles: list[AgentProfile],
                     seed: int) -> RelationGraph:
    if not profiles:
        raise ConfigurationError("cannot build relations over zero profiles")
    graph = RelationGraph([p.agent_id for p in profiles])
    by_type: dict[str, list[str]] = {}
    for p in profiles:
        by_type.setdefault(p.agent_type, []).append(p.agent_id)
    for ids in by_type.values():
        ids.sort()

    for rule in schema.pairs:
        src_ids = by_type.get(rule.src_type, [])
        dst_ids = by_type.get(rule.dst_type, [])
        if not src_ids or not dst_ids:
            continue
        stream = DetStream(stream_seed(
            seed, "RELATIONS", 0,
            "%s|%s|%s" % (rule.src_type, rule.dst_type, rule.relation_name)))
        same_type = rule.src_type == rule.dst_type
        if same_type and not rule.directed:
            pool = max(1, len(src_ids) - 1)
            p = min(1.0, rule.degree_target / pool)
            for i, a in enumerate(src_ids):
                for b in src_ids[i + 1:]:
                    if stream.random() < p:
                        graph.add_edge(a, b, rule.relation_name, False)
        else:
            pool = max(1, len(dst_ids) - 1 if same_type else len(dst_ids))
            p = min(1.0, rule.degree_target / pool)
            for a in src_ids:
                for b in dst_ids:
                    if a == b:
                        continue
                    if stream.random() < p:
                        graph.add_edge(a, b, rule.relation_name, rule.directed)
    return graph


def validate_relations(graph: RelationGraph,
                       behavior: BehaviorGraph,
                       types_of: dict[str, str] | None = None) -> ValidationReport:
    """Check the network can carry the behavior graph's event flow. The
    agent-type of each network member comes from `types_of`, or is inferred
    from id prefixes against the behavior graph's types when omitted."""
    if types_of is None:
        types_of = {}
        known = behavior.agent_types()
        for aid in graph.agent_ids:
            for t in known:
                if aid.lower().startswith(t.lower()):
                    types_of[aid] = t
                    break
    violations = []
    for aid in graph.isolated():
        violations.append(Violation(
            subject=aid, code=ISOLATED,
            detail="agent %s has no relationships" % aid))

    # Which type pairs actually have at least one edge between them?
    covered: set[tuple[str, str]] = set()
    for e in graph.edges:
        ts, td = types_of.get(e["src"]), types_of.get(e["dst"])
        if ts is None or td is None:
            continue
        covered.add((ts, td))
        if not e["directed"]:
            covered.add((td, ts))

    needed: set[tuple[str, str]] = set()
    for edge in behavior.edges:
        src_type = behavior.nodes[edge.source_node_id].agent_type
        dst_type = behavior.nodes[edge.dest_node_id].agent_type
        if src_type and dst_type:
            needed.add((src_type, dst_type))
    for pair in sorted(needed):
        if pair not in covered:
            violations.append(Violation(
                subject="%s->%s" % pair, code=NO_FLOW,
                detail="behavior events flow %s to %s but no relation connects "
                       "those types" % pair))
    return ValidationReport(ok=not violations, violations=tuple(violations))


def sample_valid_relations(schema: RelationSchema, profiles: list[AgentProfile],
                           behavior: BehaviorGraph, seed: int,
                           max_attempts: int = 50) -> RelationGraph:
    """Regenerate until the network validates; a schema that cannot produce
    a valid network within the attempt budget is a configuration problem."""
    types_of = {p.agent_id: p.agent_type for p in profiles}
    for attempt in range(max_attempts):
        graph = sample_relations(schema, profiles, seed + attempt)
        if validate_relations(graph, behavior, types_of).ok:
            return graph
    raise ConfigurationError(
        "no valid relation network in %d attempts; degree_target too low?"
        % max_attempts)
