"""Stage backends for scoring, explaining, and refining captured pairs.

Each stage comes in the same three flavors a decision itself can: a
scripted callable (deterministic, the test workhorse), a model-backed
variant that asks a DecisionBackend, and the human review queue that parks
pairs until someone on the control surface answers.
"""
from __future__ import annotations

import itertools
import json

from ..errors import (
    ConfigurationError,
    DecisionParseError,
    MalformedCompletionError,
    RefinementFailedError,
)
from ..models.base import DecisionBackend, DecisionRequest
from ..models.parsing import parse_structured
from .records import Quadruplet, Sample, check_score

STAGE_KINDS = ("scripted", "model-backed", "human-queue")


# --- scripted ---------------------------------------------------------------

class ScriptedVerifier:
    kind = "scripted"

    def __init__(self, fn):
        self.fn = fn

    async def score(self, sample: Sample) -> float:
        return check_score(self.fn(sample))


class ScriptedReasoner:
    kind = "scripted"

    def __init__(self, fn):
        self.fn = fn

    async def explain(self, sample: Sample, score: float) -> str:
        return str(self.fn(sample, score))


class ScriptedRefiner:
    kind = "scripted"

    def __init__(self, fn):
        self.fn = fn

    async def revise(self, sample: Sample, score: float,
                     rationale: str) -> str:
        return str(self.fn(sample, score, rationale))


def score_parseable(sample: Sample) -> float:
    """Default verifier: full marks when the response yields a decision
    object, bottom of the scale otherwise."""
    try:
        parse_structured(sample.response, sample.expected_outputs)
    except DecisionParseError:
        return 1.0
    return 5.0


def explain_node(sample: Sample, score: float) -> str:
    """Default reasoner: name the behavior node whose handler produced the
    response, which is the rule that must be wrong."""
    return sample.node_id


def refit_json(sample: Sample, score: float, rationale: str) -> str:
    """Default refiner: re-emit whatever object can be dug out of the
    response as one clean fenced block. Mangled fences are the usual
    damage; strip them and re-read before giving up."""
    try:
        doc = parse_structured(sample.response, sample.expected_outputs)
    except DecisionParseError:
        stripped = "\n".join(
            line for line in sample.response.splitlines()
            if not line.strip().startswith("```"))
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError:
            raise RefinementFailedError(
                "no recoverable object in the response") from None
        if not isinstance(doc, dict):
            raise RefinementFailedError(
                "response held a %s, not an object" % type(doc).__name__)
    return "```json\n%s\n```" % json.dumps(doc, sort_keys=True)


# --- model-backed -----------------------------------------------------------

def _stage_request(sample: Sample, prompt: str) -> DecisionRequest:
    return DecisionRequest(
        prompt=prompt, agent_id=sample.agent_id, node_id=sample.node_id,
        round_stamp=sample.round_stamp, purpose="sample")


class ModelVerifier:
    kind = "model-backed"

    def __init__(self, backend: DecisionBackend):
        self.backend = backend

    async def score(self, sample: Sample) -> float:
        prompt = (
            "Rate the response on a 1-5 scale for correctness and fit to "
            "the request. Reply with a JSON object {\"score\": <number>}.\n"
            "--- request ---\n%s\n--- response ---\n%s"
            % (sample.prompt, sample.response))
        reply = await self.backend.decide(_stage_request(sample, prompt))
        if "score" not in reply.parsed:
            raise MalformedCompletionError("verifier reply carries no score")
        return check_score(reply.parsed["score"])


class ModelReasoner:
    kind = "model-backed"

    def __init__(self, backend: DecisionBackend):
        self.backend = backend

    async def explain(self, sample: Sample, score: float) -> str:
        prompt = (
            "The response below scored %g of 5. Explain what is wrong with "
            "it. Reply with a JSON object {\"rationale\": <text>}.\n"
            "--- request ---\n%s\n--- response ---\n%s"
            % (score, sample.prompt, sample.response))
        reply = await self.backend.decide(_stage_request(sample, prompt))
        return str(reply.parsed.get("rationale", reply.raw))


class ModelRefiner:
    kind = "model-backed"

    def __init__(self, backend: DecisionBackend):
        self.backend = backend

    async def revise(self, sample: Sample, score: float,
                     rationale: str) -> str:
        prompt = (
            "Rewrite the response so the critique no longer applies. Reply "
            "with a JSON object {\"response\": <text>}.\n"
            "--- request ---\n%s\n--- response ---\n%s\n--- critique ---\n%s"
            % (sample.prompt, sample.response, rationale))
        reply = await self.backend.decide(_stage_request(sample, prompt))
        return str(reply.parsed.get("response", reply.raw))


# --- the human review queue -------------------------------------------------

class FeedbackQueue:
    """Pairs parked for human review, keyed by a stable item id.

    A submission settles everything at once: the reviewer's score decides
    the bucket, and a below-threshold verdict must arrive together with a
    rationale and a corrected response. Stages already answered by the
    machine side ride along as presets the reviewer cannot override.
    """

    def __init__(self, threshold: float = 3.0):
        self.threshold = check_score(threshold)
        self._pending: dict[int, dict] = {}
        self._ids = itertools.count(1)
        self.passed: list[tuple[Sample, float]] = []
        self.quadruplets: list[Quadruplet] = []

    def put(self, sample: Sample, *, score: float | None = None,
            rationale: str | None = None) -> int:
        item_id = next(self._ids)
        self._pending[item_id] = {
            "sample": sample,
            "score": None if score is None else check_score(score),
            "rationale": rationale,
        }
        return item_id

    def fetch(self, limit: int | None = None) -> list[dict]:
        rows = []
        for item_id, item in self._pending.items():
            row = dict(item["sample"].to_dict(), item_id=item_id)
            if item["score"] is not None:
                row["score"] = item["score"]
            if item["rationale"] is not None:
                row["rationale"] = item["rationale"]
            rows.append(row)
            if limit is not None and len(rows) >= limit:
                break
        return rows

    def submit(self, item_id: int, score: float | None = None,
               rationale: str = "", refined: str = "") -> dict:
        if item_id not in self._pending:
            raise ConfigurationError("no pending feedback item %r" % (item_id,))
        item = self._pending[item_id]
        effective = item["score"] if item["score"] is not None \
            else check_score(score) if score is not None else None
        if effective is None:
            raise ConfigurationError(
                "feedback item %d needs a score" % item_id)
        sample = item["sample"]
        if effective >= self.threshold:
            del self._pending[item_id]
            self.passed.append((sample, effective))
            return {"item_id": item_id, "bucket": "passed",
                    "score": effective}
        why = item["rationale"] if item["rationale"] is not None else rationale
        if not why or not refined:
            raise RefinementFailedError(
                "a below-threshold review needs a rationale and a "
                "corrected response")
        del self._pending[item_id]
        self.quadruplets.append(Quadruplet(
            prompt=sample.prompt, response=sample.response, score=effective,
            refined=refined, rationale=why))
        return {"item_id": item_id, "bucket": "quadruplet",
                "score": effective}

    @property
    def pending(self) -> int:
        return len(self._pending)
