"""Scenario data schemas: how to sample profiles and relationships."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigurationError, InvalidRangeError
from ..graph import DATA_TYPES

SAMPLER_KINDS = ("uniform-int", "uniform-float", "choice", "model-generated")
VISIBILITIES = ("public", "private")


@dataclass(frozen=True)
class SamplerSpec:
    kind: str
    low: float | None = None
    high: float | None = None
    options: tuple | None = None
    prompt: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in SAMPLER_KINDS:
            raise ConfigurationError("unknown sampler kind %r" % (self.kind,))
        if self.kind in ("uniform-int", "uniform-float"):
            if self.low is None or self.high is None:
                raise InvalidRangeError("%s sampler needs low and high" % self.kind)
            if self.low > self.high:
                raise InvalidRangeError(
                    "empty range [%r, %r]" % (self.low, self.high))
        elif self.kind == "choice":
            if not self.options:
                raise InvalidRangeError("choice sampler needs a nonempty options list")
        elif self.kind == "model-generated" and not self.prompt:
            raise ConfigurationError("model-generated sampler needs a prompt")

    @classmethod
    def from_dict(cls, doc: dict) -> "SamplerSpec":
        options = doc.get("options")
        return cls(kind=doc.get("kind", ""),
                   low=doc.get("low"), high=doc.get("high"),
                   options=tuple(options) if options is not None else None,
                   prompt=doc.get("prompt"))

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.low is not None:
            out["low"] = self.low
        if self.high is not None:
            out["high"] = self.high
        if self.options is not None:
            out["options"] = list(self.options)
        if self.prompt is not None:
            out["prompt"] = self.prompt
        return out


@dataclass(frozen=True)
class AttrSpec:
    name: str
    data_type: str
    visibility: str
    sampler: SamplerSpec

    def __post_init__(self) -> None:
        if self.data_type not in DATA_TYPES:
            raise ConfigurationError(
                "attribute %r has unknown type %r" % (self.name, self.data_type))
        if self.visibility not in VISIBILITIES:
            raise ConfigurationError(
                "attribute %r visibility must be public or private, got %r"
                % (self.name, self.visibility))

    @classmethod
    def from_dict(cls, doc: dict) -> "AttrSpec":
        sampler = doc.get("sampler")
        if not isinstance(sampler, dict):
            raise ConfigurationError(
                "attribute %r needs a sampler object" % (doc.get("name"),))
        return cls(name=doc.get("name", ""), data_type=doc.get("type", ""),
                   visibility=doc.get("visibility", "public"),
                   sampler=SamplerSpec.from_dict(sampler))

    def to_dict(self) -> dict:
        return {"name": self.name, "type": self.data_type,
                "visibility": self.visibility, "sampler": self.sampler.to_dict()}


@dataclass(frozen=True)
class ProfileSchema:
    agent_type: str
    attrs: tuple[AttrSpec, ...]

    def __post_init__(self) -> None:
        if not self.agent_type:
            raise ConfigurationError("profile schema needs an agent_type")
        seen = set()
        for attr in self.attrs:
            if attr.name in seen:
                raise ConfigurationError("duplicate attribute %r" % (attr.name,))
            seen.add(attr.name)

    @classmethod
    def from_dict(cls, doc: dict) -> "ProfileSchema":
        attrs = doc.get("attrs")
        if not isinstance(attrs, list):
            raise ConfigurationError("profile schema needs an attrs list")
        return cls(agent_type=doc.get("agent_type", ""),
                   attrs=tuple(AttrSpec.from_dict(a) for a in attrs))

    def to_dict(self) -> dict:
        return {"agent_type": self.agent_type,
                "attrs": [a.to_dict() for a in self.attrs]}


@dataclass(frozen=True)
class RelationRule:
    src_type: str
    dst_type: str
    relation_name: str
    directed: bool
    degree_target: float

    def __post_init__(self) -> None:
        if self.degree_target <= 0:
            raise ConfigurationError(
                "degree_target for %r must be positive" % (self.relation_name,))


@dataclass(frozen=True)
class RelationSchema:
    pairs: tuple[RelationRule, ...] = field(default_factory=tuple)

    @classmethod
    def from_dict(cls, doc: dict) -> "RelationSchema":
        pairs = doc.get("pairs")
        if not isinstance(pairs, list):
            raise ConfigurationError("relation schema needs a pairs list")
        return cls(pairs=tuple(
            RelationRule(src_type=p.get("src_type", ""),
                         dst_type=p.get("dst_type", ""),
                         relation_name=p.get("relation_name", "knows"),
                         directed=bool(p.get("directed", False)),
                         degree_target=float(p.get("degree_target", 0)))
            for p in pairs))

    def to_dict(self) -> dict:
        return {"pairs": [
            {"src_type": p.src_type, "dst_type": p.dst_type,
             "relation_name": p.relation_name, "directed": p.directed,
             "degree_target": p.degree_target}
            for p in self.pairs]}


def load_profile_schema(path: str | Path) -> ProfileSchema:
    with open(path, encoding="utf-8") as fh:
        return ProfileSchema.from_dict(json.load(fh))


def load_relation_schema(path: str | Path) -> RelationSchema:
    with open(path, encoding="utf-8") as fh:
        return RelationSchema.from_dict(json.load(fh))
