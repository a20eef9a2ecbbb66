"""The scoring-and-refinement batch job.

Samples go in; each one lands in exactly one place: passed (scored at or
above the threshold), a quadruplet (scored below, successfully corrected),
a flagged failure (scored below, correction failed), or parked on the
review queue when a human owns one of the stages. Nothing is dropped and
nothing is counted twice; exports later read only the quadruplets.
"""
from __future__ import annotations

import asyncio
from dataclasses import dataclass, field

from ..errors import (
    ConfigurationError,
    DecisionParseError,
    MalformedCompletionError,
    PayloadTypeError,
    RefinementFailedError,
)
from ..models.base import check_outputs
from ..models.parsing import parse_structured
from .records import FailedRefinement, Quadruplet, Sample, check_score
from .stages import (
    STAGE_KINDS,
    FeedbackQueue,
    ScriptedReasoner,
    ScriptedRefiner,
    ScriptedVerifier,
    explain_node,
    refit_json,
    score_parseable,
)


@dataclass(frozen=True)
class PipelineConfig:
    threshold: float = 3.0
    verifier: str = "scripted"
    reasoner: str = "scripted"
    refiner: str = "scripted"

    def __post_init__(self) -> None:
        check_score(self.threshold)
        for role in ("verifier", "reasoner", "refiner"):
            kind = getattr(self, role)
            if kind not in STAGE_KINDS:
                raise ConfigurationError(
                    "unknown %s kind %r (one of %s)"
                    % (role, kind, ", ".join(STAGE_KINDS)))


@dataclass
class PipelineReport:
    passed: list[tuple[Sample, float]] = field(default_factory=list)
    quadruplets: list[Quadruplet] = field(default_factory=list)
    failed: list[FailedRefinement] = field(default_factory=list)
    parked: list[int] = field(default_factory=list)

    @property
    def accounted(self) -> int:
        return (len(self.passed) + len(self.quadruplets)
                + len(self.failed) + len(self.parked))


class FeedbackPipeline:
    """Runs the three stages over a batch, in order, one owner per sample.

    Stage objects are picked by the config: scripted kinds fall back to
    the bundled defaults when no instance is given, model-backed kinds
    require one, and any human-queue kind requires the shared queue. When
    the verifier itself is human the whole sample parks unscored; when
    only the later stages are human the sample parks carrying whatever the
    machine side already settled.
    """

    def __init__(self, config: PipelineConfig | None = None, *,
                 verifier=None, reasoner=None, refiner=None,
                 queue: FeedbackQueue | None = None):
        self.config = config or PipelineConfig()
        self.queue = queue
        if any(getattr(self.config, role) == "human-queue"
               for role in ("verifier", "reasoner", "refiner")):
            if queue is None:
                raise ConfigurationError(
                    "a human-queue stage needs the shared review queue")
            if queue.threshold != self.config.threshold:
                raise ConfigurationError(
                    "review queue threshold %g does not match the "
                    "pipeline's %g" % (queue.threshold, self.config.threshold))
        self.verifier = self._pick(
            "verifier", verifier, ScriptedVerifier, score_parseable)
        self.reasoner = self._pick(
            "reasoner", reasoner, ScriptedReasoner, explain_node)
        self.refiner = self._pick(
            "refiner", refiner, ScriptedRefiner, refit_json)

    def _pick(self, role, instance, scripted_cls, default_fn):
        kind = getattr(self.config, role)
        if kind == "human-queue":
            if instance is not None:
                raise ConfigurationError(
                    "%s is owned by the review queue; drop the instance"
                    % role)
            return None
        if instance is None:
            if kind == "model-backed":
                raise ConfigurationError(
                    "model-backed %s needs a backend instance" % role)
            return scripted_cls(default_fn)
        got = getattr(instance, "kind", None)
        if got != kind:
            raise ConfigurationError(
                "%s instance is %r but the config says %r"
                % (role, got, kind))
        return instance

    async def process(self, samples: list[Sample]) -> PipelineReport:
        report = PipelineReport()
        for sample in samples:
            await self._one(sample, report)
        return report

    def process_sync(self, samples: list[Sample]) -> PipelineReport:
        return asyncio.run(self.process(samples))

    async def _one(self, sample: Sample, report: PipelineReport) -> None:
        if self.verifier is None:
            report.parked.append(self.queue.put(sample))
            return
        score = check_score(await self.verifier.score(sample))
        if score >= self.config.threshold:
            report.passed.append((sample, score))
            return

        rationale = None
        if self.reasoner is not None:
            rationale = str(await self.reasoner.explain(sample, score))
            if not rationale:
                raise MalformedCompletionError(
                    "reasoner produced an empty rationale for %s/%s"
                    % (sample.agent_id, sample.node_id))
        if self.refiner is None or self.reasoner is None:
            report.parked.append(
                self.queue.put(sample, score=score, rationale=rationale))
            return

        try:
            refined = str(await self.refiner.revise(sample, score, rationale))
        except RefinementFailedError as exc:
            report.failed.append(
                FailedRefinement(sample, score, rationale, str(exc)))
            return
        if not refined:
            report.failed.append(FailedRefinement(
                sample, score, rationale, "refiner returned nothing"))
            return
        if sample.expected_outputs:
            # A correction that no longer satisfies the node's declared
            # outputs is no correction at all.
            try:
                check_outputs(
                    parse_structured(refined, sample.expected_outputs),
                    sample.expected_outputs)
            except (DecisionParseError, PayloadTypeError) as exc:
                report.failed.append(
                    FailedRefinement(sample, score, rationale, str(exc)))
                return
        report.quadruplets.append(Quadruplet(
            prompt=sample.prompt, response=sample.response, score=score,
            refined=refined, rationale=rationale))
