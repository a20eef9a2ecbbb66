"""Completion parsing.

Model-backed handlers ask for a fenced JSON object; this module digs it out
of whatever else the model wrote. When there is no fence, two fallbacks run
in order: the whole completion as bare JSON, then a key=value scrape driven
by the expected output names (models love "sure, bid=3" answers).
"""
from __future__ import annotations

import json
import re

from ..errors import DecisionParseError
from ..graph import VariableSpec

_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)

_TRUE_WORDS = {"true", "yes", "y", "1"}
_FALSE_WORDS = {"false", "no", "n", "0"}


def _coerce_token(token: str, data_type: str):
    token = token.strip().strip('"\'')
    if data_type == "int":
        return int(token, 10)
    if data_type == "float":
        return float(token)
    if data_type == "bool":
        low = token.lower()
        if low in _TRUE_WORDS:
            return True
        if low in _FALSE_WORDS:
            return False
        raise ValueError("not a boolean: %r" % token)
    if data_type == "string":
        return token
    raise ValueError("cannot scrape %s from text" % data_type)


def _scrape(text: str, expected: tuple[VariableSpec, ...]) -> dict | None:
    out = {}
    for spec in expected:
        pattern = re.compile(
            r"\b%s\b\s*[=:]\s*(\"[^\"]*\"|'[^']*'|[^\s,;]+)" % re.escape(spec.name),
            re.IGNORECASE)
        hit = pattern.search(text)
        if hit is None:
            return None
        try:
            out[spec.name] = _coerce_token(hit.group(1), spec.data_type)
        except ValueError:
            return None
    return out


def parse_structured(text: str,
                     expected: tuple[VariableSpec, ...] = ()) -> dict:
    """Extract the decision object from a completion. Uses the last fenced
    JSON block; falls back to the full text as JSON, then to scraping
    name=value pairs for each expected output."""
    blocks = _FENCE.findall(text)
    for block in reversed(blocks):
        try:
            doc = json.loads(block)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict):
            return doc
    try:
        doc = json.loads(text)
        if isinstance(doc, dict):
            return doc
    except json.JSONDecodeError:
        pass
    if expected:
        scraped = _scrape(text, expected)
        if scraped is not None:
            return scraped
    raise DecisionParseError("no decision object found in completion", raw=text)
