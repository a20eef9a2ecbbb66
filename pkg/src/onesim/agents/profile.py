"""Agent identity and attributes.

Attributes are split into a public side, which any agent may observe, and a
private side, which never leaves the owning agent. The two namespaces must
not overlap, and an attribute keeps its type for the whole run.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from ..errors import ConfigurationError, TypeMismatchError, UnknownAttrError


def _same_type(existing: Any, new: Any) -> bool:
    if isinstance(existing, bool) or isinstance(new, bool):
        return isinstance(existing, bool) and isinstance(new, bool)
    if isinstance(existing, float) and isinstance(new, int):
        return True
    return type(new) is type(existing)


class AgentProfile:
    __slots__ = ("agent_id", "agent_type", "public_attrs", "private_attrs")

    def __init__(self, agent_id: str, agent_type: str,
                 public_attrs: dict[str, Any] | None = None,
                 private_attrs: dict[str, Any] | None = None):
        self.agent_id = agent_id
        self.agent_type = agent_type
        self.public_attrs = dict(public_attrs or {})
        self.private_attrs = dict(private_attrs or {})
        overlap = set(self.public_attrs) & set(self.private_attrs)
        if overlap:
            raise ValueError(
                "attributes cannot be both public and private: %s"
                % ", ".join(sorted(overlap)))

    def get(self, attr: str) -> Any:
        if attr in self.public_attrs:
            return self.public_attrs[attr]
        if attr in self.private_attrs:
            return self.private_attrs[attr]
        raise UnknownAttrError(attr)

    def update(self, attr: str, value: Any, visibility: str | None = None) -> None:
        """Replace an existing attribute's value, keeping its side and type.
        `visibility` may assert which side the attribute should be on."""
        if attr in self.public_attrs:
            side, attrs = "public", self.public_attrs
        elif attr in self.private_attrs:
            side, attrs = "private", self.private_attrs
        else:
            raise UnknownAttrError(attr)
        if visibility is not None and visibility != side:
            raise UnknownAttrError("%s (no %s attribute of that name)" % (attr, visibility))
        if not _same_type(attrs[attr], value):
            raise TypeMismatchError(
                "attribute %r holds %s, refusing %s"
                % (attr, type(attrs[attr]).__name__, type(value).__name__))
        attrs[attr] = value

    def observe_view(self) -> dict[str, Any]:
        """What other agents see: the public side only, copied."""
        return dict(self.public_attrs)

    def render_text(self) -> str:
        """Full self-view for prompt building (the owner sees both sides)."""
        parts = ["id=%s type=%s" % (self.agent_id, self.agent_type)]
        for name in sorted(self.public_attrs):
            parts.append("%s=%r" % (name, self.public_attrs[name]))
        for name in sorted(self.private_attrs):
            parts.append("%s=%r (private)" % (name, self.private_attrs[name]))
        return "; ".join(parts)

    def to_dict(self) -> dict:
        return {
            "id": self.agent_id,
            "type": self.agent_type,
            "public": dict(self.public_attrs),
            "private": dict(self.private_attrs),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AgentProfile":
        for key in ("id", "type"):
            if key not in doc:
                raise ConfigurationError("profile entry missing %r" % key)
        return cls(doc["id"], doc["type"],
                   doc.get("public", {}), doc.get("private", {}))


def load_profiles(path: str | Path) -> list[AgentProfile]:
    with open(path, encoding="utf-8") as fh:
        docs = json.load(fh)
    if not isinstance(docs, list):
        raise ConfigurationError("profile file %s must hold a JSON array" % path)
    return [AgentProfile.from_dict(d) for d in docs]


def save_profiles(profiles: list[AgentProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([p.to_dict() for p in profiles], fh, indent=2, sort_keys=True)
        fh.write("\n")
