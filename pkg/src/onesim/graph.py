"""Behavior graphs: the declarative scenario format that drives execution.

A graph is a set of action nodes (each owned by an agent type) joined by
event edges, bracketed by a Start and an End node owned by the environment.
This module covers the document format, structural and dataflow validation,
and the deterministic traversal order used when binding handlers.

Graphs are immutable once validated and safe to share across threads,
processes, and workers (the wire layer checks a content hash on register).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DanglingReferenceError, GraphNotValidatedError, GraphParseError

DATA_TYPES = ("int", "float", "string", "bool", "list", "map")
VARIABLE_SOURCES = ("environment", "agent-state", "incoming-event", "produced")

# Structure/dataflow violation codes.
UNREACHABLE = "unreachable-from-start"
NO_PATH_TO_END = "cannot-reach-end"
MISSING_VARIABLE = "missing-variable"
TYPE_MISMATCH = "type-mismatch"


def check_value(data_type: str, value) -> bool:
    """True iff ``value`` inhabits ``data_type``.

    bool is not an int here, ints are acceptable floats (JSON writers
    routinely emit ``1`` for ``1.0``).
    """
    if data_type == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if data_type == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if data_type == "string":
        return isinstance(value, str)
    if data_type == "bool":
        return isinstance(value, bool)
    if data_type == "list":
        return isinstance(value, list)
    if data_type == "map":
        return isinstance(value, dict)
    return False


@dataclass(frozen=True)
class VariableSpec:
    name: str
    data_type: str
    default_value: object = None
    description: str = ""
    source: str = "produced"

    def accepts(self, value) -> bool:
        return check_value(self.data_type, value)


@dataclass(frozen=True)
class ActionNode:
    node_id: str
    agent_type: str
    action_name: str
    description: str = ""
    preconditions: tuple[str, ...] = ()
    inputs: tuple[VariableSpec, ...] = ()
    outputs: tuple[VariableSpec, ...] = ()


@dataclass(frozen=True)
class EventEdge:
    edge_id: str
    event_name: str
    source_node_id: str
    dest_node_id: str
    condition: str | None = None
    variables: tuple[VariableSpec, ...] = ()


@dataclass(frozen=True)
class Violation:
    subject: str
    code: str
    detail: str = ""


@dataclass
class ValidationReport:
    ok: bool
    violations: list[Violation] = field(default_factory=list)

    def subjects(self) -> set[str]:
        return {v.subject for v in self.violations}

    def render(self) -> str:
        if self.ok:
            return "ok"
        lines = [f"{v.subject}: {v.code}" + (f" ({v.detail})" if v.detail else "")
                 for v in self.violations]
        return "\n".join(lines)


class BehaviorGraph:
    """In-memory graph; build via :func:`load_graph` or :meth:`from_dict`."""

    def __init__(self, nodes: dict[str, ActionNode], edges: list[EventEdge],
                 start_node_id: str, end_node_id: str):
        self.nodes = nodes
        self.edges = list(edges)
        self.start_node_id = start_node_id
        self.end_node_id = end_node_id
        self._structure_ok = False
        self._out: dict[str, list[EventEdge]] = {nid: [] for nid in nodes}
        self._in: dict[str, list[EventEdge]] = {nid: [] for nid in nodes}
        for e in self.edges:
            self._out[e.source_node_id].append(e)
            self._in[e.dest_node_id].append(e)

    # --- accessors ----------------------------------------------------------

    def out_edges(self, node_id: str) -> list[EventEdge]:
        return self._out[node_id]

    def in_edges(self, node_id: str) -> list[EventEdge]:
        return self._in[node_id]

    @property
    def structure_validated(self) -> bool:
        return self._structure_ok

    def agent_types(self) -> set[str]:
        return {n.agent_type for n in self.nodes.values() if n.agent_type}

    def __eq__(self, other) -> bool:
        if not isinstance(other, BehaviorGraph):
            return NotImplemented
        return (self.nodes == other.nodes
                and sorted(self.edges, key=lambda e: e.edge_id)
                == sorted(other.edges, key=lambda e: e.edge_id)
                and self.start_node_id == other.start_node_id
                and self.end_node_id == other.end_node_id)

    def __hash__(self):
        return hash((self.start_node_id, self.end_node_id, len(self.nodes), len(self.edges)))

    # --- serialization ------------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict, *, path: str | None = None) -> "BehaviorGraph":
        def fail(message: str, field_name: str | None = None):
            raise GraphParseError(message, path=path, field=field_name)

        if not isinstance(doc, dict):
            fail("graph document must be a JSON object")
        for key in ("nodes", "edges", "start", "end"):
            if key not in doc:
                fail(f"missing required key {key!r}", key)
        if not isinstance(doc["nodes"], dict) or not doc["nodes"]:
            fail("'nodes' must be a non-empty object", "nodes")
        if not isinstance(doc["edges"], list):
            fail("'edges' must be an array", "edges")

        def parse_variables(raw, where: str) -> tuple[VariableSpec, ...]:
            if not isinstance(raw, list):
                fail("variables must be an array", where)
            out = []
            for i, v in enumerate(raw):
                ctx = f"{where}[{i}]"
                if not isinstance(v, dict) or "name" not in v or "type" not in v:
                    fail("variable needs at least 'name' and 'type'", ctx)
                if v["type"] not in DATA_TYPES:
                    fail(f"unknown data type {v['type']!r}", ctx)
                source = v.get("source", "produced")
                if source not in VARIABLE_SOURCES:
                    fail(f"unknown variable source {source!r}", ctx)
                default = v.get("default")
                if default is not None and not check_value(v["type"], default):
                    fail(f"default {default!r} does not type-check as {v['type']}", ctx)
                out.append(VariableSpec(
                    name=v["name"], data_type=v["type"], default_value=default,
                    description=v.get("description", ""), source=source))
            return tuple(out)

        nodes: dict[str, ActionNode] = {}
        for nid, raw in doc["nodes"].items():
            if not isinstance(raw, dict):
                fail("node must be an object", f"nodes.{nid}")
            nodes[nid] = ActionNode(
                node_id=nid,
                agent_type=raw.get("agent_type", ""),
                action_name=raw.get("action_name", nid),
                description=raw.get("description", ""),
                preconditions=tuple(raw.get("preconditions", ())),
                inputs=parse_variables(raw.get("inputs", []), f"nodes.{nid}.inputs"),
                outputs=parse_variables(raw.get("outputs", []), f"nodes.{nid}.outputs"),
            )

        edges: list[EventEdge] = []
        seen_pair_names: set[tuple[str, str, str]] = set()
        for i, raw in enumerate(doc["edges"]):
            ctx = f"edges[{i}]"
            if not isinstance(raw, dict):
                fail("edge must be an object", ctx)
            for key in ("event_name", "source", "dest"):
                if key not in raw:
                    fail(f"edge missing {key!r}", ctx)
            for endpoint in (raw["source"], raw["dest"]):
                if endpoint not in nodes:
                    raise DanglingReferenceError(endpoint, context=ctx)
            triple = (raw["source"], raw["dest"], raw["event_name"])
            if triple in seen_pair_names:
                fail(f"duplicate event {raw['event_name']!r} between "
                     f"{raw['source']!r} and {raw['dest']!r}", ctx)
            seen_pair_names.add(triple)
            edges.append(EventEdge(
                edge_id=raw.get("id", f"e{i}"),
                event_name=raw["event_name"],
                source_node_id=raw["source"],
                dest_node_id=raw["dest"],
                condition=raw.get("condition"),
                variables=parse_variables(raw.get("variables", []), f"{ctx}.variables"),
            ))

        for label, ref in (("start", doc["start"]), ("end", doc["end"])):
            if ref not in nodes:
                raise DanglingReferenceError(ref, context=label)
        if doc["start"] == doc["end"]:
            fail("start and end must be distinct nodes")

        return cls(nodes, edges, doc["start"], doc["end"])

    def to_dict(self) -> dict:
        def var_doc(v: VariableSpec) -> dict:
            return {"name": v.name, "type": v.data_type, "default": v.default_value,
                    "description": v.description, "source": v.source}

        return {
            "nodes": {
                nid: {
                    "agent_type": n.agent_type,
                    "action_name": n.action_name,
                    "description": n.description,
                    "preconditions": list(n.preconditions),
                    "inputs": [var_doc(v) for v in n.inputs],
                    "outputs": [var_doc(v) for v in n.outputs],
                }
                for nid, n in sorted(self.nodes.items())
            },
            "edges": [
                {
                    "id": e.edge_id,
                    "event_name": e.event_name,
                    "source": e.source_node_id,
                    "dest": e.dest_node_id,
                    "condition": e.condition,
                    "variables": [var_doc(v) for v in e.variables],
                }
                for e in self.edges
            ],
            "start": self.start_node_id,
            "end": self.end_node_id,
        }


def load_graph(path: str | Path) -> BehaviorGraph:
    """Load and shape-check a graph document (no path validation yet)."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphParseError(f"cannot read graph file: {exc}", path=str(p)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}",
                              path=str(p)) from exc
    return BehaviorGraph.from_dict(doc, path=str(p))


def save_graph(graph: BehaviorGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph.to_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def graph_hash(graph: BehaviorGraph) -> str:
    """Content hash used by workers to prove they run the same scenario."""
    canonical = json.dumps(graph.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- validation -------------------------------------------------------------

def _forward_reachable(graph: BehaviorGraph, origin: str) -> set[str]:
    seen = {origin}
    frontier = [origin]
    while frontier:
        nxt = []
        for nid in frontier:
            for e in graph.out_edges(nid):
                if e.dest_node_id not in seen:
                    seen.add(e.dest_node_id)
                    nxt.append(e.dest_node_id)
        frontier = nxt
    return seen


def _backward_reachable(graph: BehaviorGraph, origin: str) -> set[str]:
    seen = {origin}
    frontier = [origin]
    while frontier:
        nxt = []
        for nid in frontier:
            for e in graph.in_edges(nid):
                if e.source_node_id not in seen:
                    seen.add(e.source_node_id)
                    nxt.append(e.source_node_id)
        frontier = nxt
    return seen


def validate_structure(graph: BehaviorGraph) -> ValidationReport:
    """Every node must lie on some Start-to-End path.

    Equivalent check: reachable from Start and able to reach End. One
    violation per failing node, naming each failed direction.
    """
    from_start = _forward_reachable(graph, graph.start_node_id)
    to_end = _backward_reachable(graph, graph.end_node_id)
    violations = []
    for nid in sorted(graph.nodes):
        problems = []
        if nid not in from_start:
            problems.append(UNREACHABLE)
        if nid not in to_end:
            problems.append(NO_PATH_TO_END)
        if problems:
            violations.append(Violation(subject=nid, code=" ".join(problems)))
    report = ValidationReport(ok=not violations, violations=violations)
    if report.ok:
        graph._structure_ok = True
    return report


def validate_dataflow(graph: BehaviorGraph) -> ValidationReport:
    """Incoming-event inputs must be supplied by some inbound edge.

    A node input with source=incoming-event is satisfied when at least one
    inbound edge declares a variable of the same name and data type.
    """
    if not graph._structure_ok:
        raise GraphNotValidatedError("run validate_structure first")
    violations = []
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        inbound = graph.in_edges(nid)
        for spec in node.inputs:
            if spec.source != "incoming-event":
                continue
            declared = [v for e in inbound for v in e.variables if v.name == spec.name]
            if not declared:
                violations.append(Violation(
                    subject=nid, code=MISSING_VARIABLE,
                    detail=f"input {spec.name!r} not declared on any inbound edge"))
            elif all(v.data_type != spec.data_type for v in declared):
                got = sorted({v.data_type for v in declared})
                violations.append(Violation(
                    subject=nid, code=TYPE_MISMATCH,
                    detail=f"input {spec.name!r} wants {spec.data_type}, "
                           f"edges carry {', '.join(got)}"))
    return ValidationReport(ok=not violations, violations=violations)


def traversal_order(graph: BehaviorGraph) -> list[str]:
    """Breadth-first order from Start, same-depth ties by ascending node id."""
    if not graph._structure_ok:
        raise GraphNotValidatedError("run validate_structure first")
    order = [graph.start_node_id]
    seen = {graph.start_node_id}
    frontier = [graph.start_node_id]
    while frontier:
        nxt = set()
        for nid in frontier:
            for e in graph.out_edges(nid):
                if e.dest_node_id not in seen:
                    nxt.add(e.dest_node_id)
        frontier = sorted(nxt)
        seen.update(frontier)
        order.extend(frontier)
    return order
