"""Prompt planning.

A planning strategy is a template with four slots: {profile}, {memory},
{context}, and {action}. The three shipped styles differ only in how the
template walks the model through the decision; they all render through the
same slot set, so any strategy can back any model-driven handler.
"""
from __future__ import annotations

import string

from ..errors import ConfigurationError
from ..resources import planning_asset

KINDS = ("COT", "BDI", "TOM")
SLOTS = frozenset({"profile", "memory", "context", "action"})

_ASSET_FILES = {"COT": "cot", "BDI": "bdi", "TOM": "tom"}


class PlanningStrategy:
    def __init__(self, kind: str, template: str):
        if kind not in KINDS:
            raise ConfigurationError("unknown planning kind %r" % (kind,))
        used = {name for _, name, _, _ in string.Formatter().parse(template)
                if name is not None}
        stray = used - SLOTS
        if stray:
            raise ConfigurationError(
                "template for %s uses undeclared slots: %s"
                % (kind, ", ".join(sorted(stray))))
        self.kind = kind
        self.template = template

    def render(self, profile: str, memory: str, context: str, action: str) -> str:
        return self.template.format(
            profile=profile, memory=memory, context=context, action=action)


def load_strategy(kind: str) -> PlanningStrategy:
    """Load one of the shipped templates by kind."""
    if kind not in _ASSET_FILES:
        raise ConfigurationError("unknown planning kind %r" % (kind,))
    text = planning_asset(_ASSET_FILES[kind]).read_text(encoding="utf-8")
    return PlanningStrategy(kind, text)
