from .base import DecisionBackend, DecisionRequest, DecisionResponse, check_outputs
from .parsing import parse_structured
from .remote import RemoteBackend
from .rules import RuleBackend
from .wrappers import with_capture, with_latency

__all__ = [
    "DecisionBackend",
    "DecisionRequest",
    "DecisionResponse",
    "RemoteBackend",
    "RuleBackend",
    "check_outputs",
    "parse_structured",
    "with_capture",
    "with_latency",
]
