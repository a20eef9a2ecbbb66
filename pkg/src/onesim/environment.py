"""Shared environment state.

One EnvState instance is the single source of truth for a run: global
variables (type-stable once defined), the append-only collected-data list,
and the round counter. Workers in a multi-process run never hold their own
copy; they go through a proxy that forwards reads and writes to the owner.
"""
from __future__ import annotations

import threading
import time
from typing import Any

from .errors import TypeMismatchError, UnknownVarError


def _type_name(value: Any) -> str:
    # bool is deliberately checked before int: flags must stay flags.
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    return type(value).__name__


def _compatible(existing: Any, new: Any) -> bool:
    if isinstance(existing, bool) or isinstance(new, bool):
        return isinstance(existing, bool) and isinstance(new, bool)
    if isinstance(existing, float) and isinstance(new, int):
        return True
    return type(new) is type(existing)


class EnvState:
    """In-process environment store. Thread-safe so a serving layer can read
    snapshots while the simulation loop mutates state."""

    def __init__(self, initial: dict[str, Any] | None = None):
        self._lock = threading.RLock()
        self._vars: dict[str, Any] = {}
        self._collected: list[dict] = []
        self.round = 0
        self.n_agents = 0
        for name, value in (initial or {}).items():
            self.define(name, value)

    def define(self, name: str, value: Any) -> None:
        with self._lock:
            if name in self._vars and not _compatible(self._vars[name], value):
                raise TypeMismatchError(
                    "variable %r is %s, cannot redefine as %s"
                    % (name, _type_name(self._vars[name]), _type_name(value)))
            self._vars[name] = value

    def get(self, name: str) -> Any:
        with self._lock:
            if name not in self._vars:
                raise UnknownVarError(name)
            return self._vars[name]

    def set(self, name: str, value: Any) -> None:
        with self._lock:
            if name not in self._vars:
                raise UnknownVarError(name)
            if not _compatible(self._vars[name], value):
                raise TypeMismatchError(
                    "variable %r holds %s, refusing %s"
                    % (name, _type_name(self._vars[name]), _type_name(value)))
            self._vars[name] = value

    def has(self, name: str) -> bool:
        with self._lock:
            return name in self._vars

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._vars)

    # --- collected data ------------------------------------------------------

    def add_collected(self, agent_id: str, payload: dict, round_stamp: int) -> None:
        with self._lock:
            self._collected.append(
                {"agent_id": agent_id, "round": round_stamp, "payload": payload})

    @property
    def collected(self) -> list[dict]:
        with self._lock:
            return list(self._collected)

    # --- snapshots -----------------------------------------------------------

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "round": self.round,
                "n_agents": self.n_agents,
                "vars": {k: self._vars[k] for k in sorted(self._vars)},
            }


class EnvProxy:
    """Environment handle given to agents. Reads and writes go straight to
    the backing store by default (cache_ttl=0); a positive TTL keeps a local
    read cache for that many seconds, which trades staleness for chatter on
    remote backends. Writes always go through and refresh the cache."""

    def __init__(self, state: EnvState, cache_ttl: float = 0.0,
                 clock=None):
        self._state = state
        self._ttl = cache_ttl
        self._clock = clock or time.monotonic
        self._cache: dict[str, tuple[float, Any]] = {}

    def get(self, name: str) -> Any:
        if self._ttl > 0:
            hit = self._cache.get(name)
            if hit is not None and self._clock() - hit[0] < self._ttl:
                return hit[1]
        value = self._state.get(name)
        if self._ttl > 0:
            self._cache[name] = (self._clock(), value)
        return value

    def set(self, name: str, value: Any) -> None:
        self._state.set(name, value)
        if self._ttl > 0:
            self._cache[name] = (self._clock(), value)

    @property
    def round(self) -> int:
        return self._state.round
