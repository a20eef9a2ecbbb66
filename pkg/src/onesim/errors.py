"""Exception hierarchy shared across the engine.

Everything raised on purpose derives from :class:`OneSimError` so callers
(CLI, control service) can catch one base and report a module-qualified
message. Validation problems that are *data* (graph reports, relation
reports) are not exceptions; see the ValidationReport types instead.
"""
from __future__ import annotations


class OneSimError(Exception):
    """Base class for all engine errors."""


# --- behavior graph ---------------------------------------------------------

class GraphError(OneSimError):
    pass


class GraphParseError(GraphError):
    """Graph document did not parse; carries file/field context."""

    def __init__(self, message: str, *, path: str | None = None, field: str | None = None):
        self.path = path
        self.field = field
        where = "".join(
            f" ({label}: {value})"
            for label, value in (("file", path), ("field", field))
            if value
        )
        super().__init__(f"{message}{where}")


class DanglingReferenceError(GraphError):
    """An edge or start/end pointer names a node id that does not exist."""

    def __init__(self, ref: str, *, context: str = ""):
        self.ref = ref
        suffix = f" in {context}" if context else ""
        super().__init__(f"unknown node id {ref!r}{suffix}")


class GraphNotValidatedError(GraphError):
    """Operation requires a graph that passed structure validation."""


# --- runtime core -----------------------------------------------------------

class QueueClosedError(OneSimError):
    """Publish attempted after the run terminated."""


class UnknownAgentError(OneSimError):
    def __init__(self, agent_id: str):
        self.agent_id = agent_id
        super().__init__(f"unknown agent {agent_id!r}")


class StalledRoundError(OneSimError):
    """A round did not complete within the stall timeout."""

    def __init__(self, round_stamp: int, busy_agents: list[str]):
        self.round_stamp = round_stamp
        self.busy_agents = busy_agents
        super().__init__(
            f"round {round_stamp} stalled; waiting on agents: {', '.join(busy_agents) or '<none>'}"
        )


# --- agents -----------------------------------------------------------------

class NoBindingError(OneSimError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"no handler binding for node {node_id!r}")


class PayloadTypeError(OneSimError):
    """Handler output does not satisfy the outgoing edge's variable spec."""


class UnknownAttrError(OneSimError):
    def __init__(self, attr: str):
        self.attr = attr
        super().__init__(f"unknown profile attribute {attr!r}")


class TypeMismatchError(OneSimError):
    """A value's type conflicts with the declared or established type."""


# --- environment ------------------------------------------------------------

class UnknownVarError(OneSimError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown environment variable {name!r}")


class PartialCollectionError(OneSimError):
    """collect_data timed out on some agents; partial payloads are attached."""

    def __init__(self, missing: list[str], collected: list):
        self.missing = missing
        self.collected = collected
        super().__init__(f"no data-collection reply from: {', '.join(missing)}")


# --- distributed ------------------------------------------------------------

class EmptyPopulationError(OneSimError):
    pass


class UnknownTargetError(OneSimError):
    def __init__(self, agent_id: str):
        self.agent_id = agent_id
        super().__init__(f"no worker owns agent {agent_id!r}")


class DuplicateRegistrationError(OneSimError):
    def __init__(self, worker_id: str):
        self.worker_id = worker_id
        super().__init__(f"worker {worker_id!r} already registered")


class VersionMismatchError(OneSimError):
    """Worker's behavior-graph hash differs from the master's."""


class WireFormatError(OneSimError):
    """Frame on the wire did not decode to a well-formed message."""


# --- decision models --------------------------------------------------------

class BackendUnavailableError(OneSimError):
    """Decision backend unreachable after retries."""


class DecisionParseError(OneSimError):
    """Response text could not be coerced into the expected outputs."""

    def __init__(self, message: str, raw: str = ""):
        self.raw = raw
        super().__init__(message)


class MissingRuleError(OneSimError):
    def __init__(self, rule_name: str):
        self.rule_name = rule_name
        super().__init__(f"no rule registered under {rule_name!r}")


class MalformedCompletionError(OneSimError):
    """Remote endpoint replied with JSON not shaped like a chat completion."""


# --- scenario toolkit -------------------------------------------------------

class InvalidRangeError(OneSimError):
    pass


class ConfigurationError(OneSimError):
    """Scenario configuration cannot produce valid data (e.g. degree too low)."""


# --- feedback pipeline ------------------------------------------------------

class RefinementFailedError(OneSimError):
    pass


class EmptySetError(OneSimError):
    """Export requested but no quadruplets exist."""


# --- control service --------------------------------------------------------

class RunNotActiveError(OneSimError):
    pass


class IllegalTransitionError(OneSimError):
    def __init__(self, current: str, requested: str):
        self.current = current
        self.requested = requested
        super().__init__(f"cannot {requested} a run in state {current!r}")


# --- metrics ----------------------------------------------------------------

class DegenerateGridError(OneSimError):
    """Grid has no adjacency edges, so edge metrics are undefined."""


class LengthMismatchError(OneSimError):
    pass


# --- manifests --------------------------------------------------------------

class ManifestError(OneSimError):
    """Run manifest references missing files or inconsistent settings."""
