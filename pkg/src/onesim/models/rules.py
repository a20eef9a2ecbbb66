"""Scripted decision backend.

Rules make desk-scale runs exact and fast: each bound node maps to a pure
function of the rule context (profile snapshot, memory view, event payload,
and a per-call rng stream). Determinism comes from the stream derivation,
not from call order, so the same run replays bit-for-bit on any worker
layout.
"""
from __future__ import annotations

import json
import time
from typing import Any, Callable

from ..errors import MissingRuleError
from .base import DecisionRequest, DecisionResponse, check_outputs

RuleFn = Callable[[Any], dict]


class RuleBackend:
    def __init__(self, rules: dict[str, RuleFn] | None = None,
                 chat_rule: Callable[[Any, str], str] | None = None):
        self.rules = dict(rules or {})
        self.chat_rule = chat_rule

    def register(self, node_id: str, fn: RuleFn) -> None:
        self.rules[node_id] = fn

    async def decide(self, request: DecisionRequest) -> DecisionResponse:
        t0 = time.monotonic()
        ctx = (request.context or {}).get("rule_ctx")
        if request.purpose == "chat":
            if self.chat_rule is None or ctx is None:
                raise MissingRuleError("chat")
            answer = self.chat_rule(ctx, request.prompt)
            return DecisionResponse(raw=answer, parsed={"answer": answer},
                                    latency_s=time.monotonic() - t0)
        fn = self.rules.get(request.node_id)
        if fn is None:
            raise MissingRuleError(request.node_id)
        outputs = fn(ctx)
        parsed = check_outputs(outputs, request.expected_outputs)
        raw = json.dumps({k: v for k, v in parsed.items() if not k.startswith("_")},
                         sort_keys=True, default=str)
        return DecisionResponse(raw=raw, parsed=parsed,
                                latency_s=time.monotonic() - t0)
