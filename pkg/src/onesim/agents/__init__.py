from .agent import GeneralAgent, HandlerBinding, RuleContext
from .memory import MemoryConfig, MemoryRecord, MemoryStore
from .planning import PlanningStrategy, load_strategy
from .profile import AgentProfile, load_profiles, save_profiles

__all__ = [
    "AgentProfile",
    "GeneralAgent",
    "HandlerBinding",
    "MemoryConfig",
    "MemoryRecord",
    "MemoryStore",
    "PlanningStrategy",
    "RuleContext",
    "load_profiles",
    "load_strategy",
    "save_profiles",
]
