"""Feedback path: capture, scoring, refinement buckets, the human review
queue, and tuning dataset files."""
import asyncio
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onesim.errors import (
    ConfigurationError,
    EmptySetError,
    InvalidRangeError,
    MalformedCompletionError,
    RefinementFailedError,
)
from onesim.feedback import (
    CaptureSink,
    FeedbackPipeline,
    FeedbackQueue,
    ModelReasoner,
    ModelRefiner,
    ModelVerifier,
    PipelineConfig,
    Quadruplet,
    Sample,
    ScriptedReasoner,
    ScriptedRefiner,
    ScriptedVerifier,
    check_score,
    dataset_row,
    explain_node,
    export_dataset,
    export_datasets,
    load_dataset,
    refit_json,
    score_parseable,
)
from onesim.graph import VariableSpec
from onesim.models import RuleBackend, with_capture
from onesim.models.base import DecisionResponse
from onesim.models.parsing import parse_structured
from onesim.run import SimulationRun
from onesim.scenarios import build_scenario


def sample(prompt="decide something", response="{}", agent_id="a1",
           node_id="negotiate", round_stamp=0, **kw):
    return Sample(prompt=prompt, response=response, agent_id=agent_id,
                  node_id=node_id, round_stamp=round_stamp, **kw)


def scripted(score_fn):
    return FeedbackPipeline(verifier=ScriptedVerifier(score_fn))


# --- records ----------------------------------------------------------------

def test_sample_needs_a_prompt():
    with pytest.raises(ConfigurationError):
        sample(prompt="")
    assert sample().to_dict()["agent_id"] == "a1"


def test_score_range_is_closed_one_to_five():
    assert check_score(1) == 1.0 and check_score(5) == 5.0
    for bad in (0.99, 5.01, -3, float("nan")):
        with pytest.raises(InvalidRangeError):
            check_score(bad)


def test_quadruplet_invariants():
    with pytest.raises(ConfigurationError):
        Quadruplet(prompt="p", response="r", score=2.0, refined="",
                   rationale="why")
    with pytest.raises(InvalidRangeError):
        Quadruplet(prompt="p", response="r", score=9.0, refined="ok",
                   rationale="why")


def test_capture_sink_records_and_drains():
    sink = CaptureSink()
    scenario = build_scenario("minimal", {"n_agents": 3, "max_rounds": 2})
    backend = with_capture(
        RuleBackend(scenario.rules, chat_rule=scenario.chat_rule), sink)
    run = SimulationRun(scenario, backend=backend)
    run.run_sync()
    # One captured pair per domain activation: every agent, every round.
    assert len(sink) == 3 * 2
    assert all(s.ok and s.prompt for s in sink.samples)
    assert {s.node_id for s in sink.samples} <= set(scenario.rules)
    assert sorted({s.round_stamp for s in sink.samples}) == [0, 1]
    drained = sink.take()
    assert len(drained) == 6 and len(sink) == 0


# --- scripted stage defaults ------------------------------------------------

def test_default_verifier_scores_parseability():
    assert score_parseable(sample(response='{"x": 1}')) == 5.0
    assert score_parseable(sample(response="no object here")) == 1.0


def test_default_reasoner_names_the_node():
    assert explain_node(sample(node_id="negotiate"), 2.0) == "negotiate"


def test_default_refiner_recovers_broken_fences():
    broken = sample(response='```json\n{"bid": 3}')  # fence never closed
    fixed = refit_json(broken, 1.0, "mangled fences")
    assert parse_structured(fixed) == {"bid": 3}

    with pytest.raises(RefinementFailedError):
        refit_json(sample(response="hopeless"), 1.0, "why")
    with pytest.raises(RefinementFailedError):
        refit_json(sample(response="[1, 2]"), 1.0, "why")


# --- the pipeline -----------------------------------------------------------

def test_pipeline_buckets_partition_the_batch():
    batch = [sample(prompt="p%d" % i, response='{"i": %d}' % i,
                    agent_id="a%d" % i) for i in range(10)]
    pipe = scripted(lambda s: 5.0 if int(s.agent_id[1:]) % 2 else 2.0)
    report = pipe.process_sync(batch)
    assert len(report.passed) == 5
    assert len(report.quadruplets) == 5
    assert report.failed == [] and report.parked == []
    assert report.accounted == 10
    seen = {s.prompt for s, _ in report.passed} \
        | {q.prompt for q in report.quadruplets}
    assert seen == {s.prompt for s in batch}
    quad = report.quadruplets[0]
    assert quad.score == 2.0 and quad.rationale == "negotiate"
    assert parse_structured(quad.refined) == {"i": 0}


def test_threshold_comparison_is_strict():
    pipe = scripted(lambda s: 3.0)  # exactly at the default threshold
    report = pipe.process_sync([sample()])
    assert len(report.passed) == 1 and report.quadruplets == []


def test_failed_refinements_are_kept_but_flagged():
    pipe = scripted(lambda s: 1.0)  # all low; default refiner must fix JSON
    report = pipe.process_sync([sample(response="beyond repair")])
    assert report.quadruplets == [] and len(report.failed) == 1
    flag = report.failed[0]
    assert flag.score == 1.0 and "no recoverable object" in flag.reason


def test_refined_response_must_satisfy_declared_outputs():
    spec = (VariableSpec("bid", "int"),)
    wrong = sample(response='{"bid": "high"}', expected_outputs=spec)
    pipe = scripted(lambda s: 1.0)
    report = pipe.process_sync([wrong])
    # The default refiner re-emits the same object; its bid is still a
    # string, so the correction is rejected and the pair stays flagged.
    assert report.quadruplets == [] and len(report.failed) == 1
    assert "bid" in report.failed[0].reason

    fixing = FeedbackPipeline(
        verifier=ScriptedVerifier(lambda s: 1.0),
        refiner=ScriptedRefiner(lambda s, sc, why: '{"bid": 3}'))
    good = fixing.process_sync([wrong])
    assert len(good.quadruplets) == 1


def test_empty_rationale_is_rejected():
    pipe = FeedbackPipeline(
        verifier=ScriptedVerifier(lambda s: 1.0),
        reasoner=ScriptedReasoner(lambda s, sc: ""))
    with pytest.raises(MalformedCompletionError):
        pipe.process_sync([sample()])


def test_pipeline_config_validation():
    with pytest.raises(InvalidRangeError):
        PipelineConfig(threshold=0.5)
    with pytest.raises(ConfigurationError):
        PipelineConfig(verifier="oracle")
    with pytest.raises(ConfigurationError):
        FeedbackPipeline(PipelineConfig(verifier="model-backed"))
    with pytest.raises(ConfigurationError):
        FeedbackPipeline(PipelineConfig(verifier="model-backed"),
                         verifier=ScriptedVerifier(lambda s: 5.0))
    with pytest.raises(ConfigurationError):
        FeedbackPipeline(PipelineConfig(verifier="human-queue"))
    with pytest.raises(ConfigurationError):
        FeedbackPipeline(PipelineConfig(verifier="human-queue", threshold=4.0),
                         queue=FeedbackQueue(threshold=2.0))


@settings(max_examples=40, deadline=None)
@given(scores=st.lists(
    st.floats(min_value=1.0, max_value=5.0, allow_nan=False), max_size=30),
    threshold=st.floats(min_value=1.0, max_value=5.0, allow_nan=False))
def test_pipeline_conserves_every_sample(scores, threshold):
    batch = [sample(prompt="p%d" % i, response='{"i": %d}' % i,
                    agent_id="a%d" % i) for i in range(len(scores))]
    table = {"a%d" % i: s for i, s in enumerate(scores)}
    pipe = FeedbackPipeline(
        PipelineConfig(threshold=threshold),
        verifier=ScriptedVerifier(lambda s: table[s.agent_id]))
    report = pipe.process_sync(batch)
    assert report.accounted == len(batch)
    assert len(report.passed) == sum(1 for s in scores if s >= threshold)
    assert len(report.quadruplets) == sum(1 for s in scores if s < threshold)
    assert all(q.score < threshold for q in report.quadruplets)


# --- model-backed stages ----------------------------------------------------

class CannedBackend:
    def __init__(self, parsed, raw="canned text"):
        self.parsed = parsed
        self.raw = raw
        self.requests = []

    async def decide(self, request):
        self.requests.append(request)
        return DecisionResponse(raw=self.raw, parsed=dict(self.parsed))


def test_model_backed_stages_with_a_mock():
    async def go():
        verifier = ModelVerifier(CannedBackend({"score": 4}))
        assert await verifier.score(sample()) == 4.0
        assert verifier.backend.requests[0].purpose == "sample"

        with pytest.raises(MalformedCompletionError):
            await ModelVerifier(CannedBackend({})).score(sample())
        with pytest.raises(InvalidRangeError):
            await ModelVerifier(CannedBackend({"score": 11})).score(sample())

        reasoner = ModelReasoner(CannedBackend({"rationale": "fixture text"}))
        assert await reasoner.explain(sample(), 2.0) == "fixture text"
        bare = ModelReasoner(CannedBackend({}, raw="free-form critique"))
        assert await bare.explain(sample(), 2.0) == "free-form critique"

        refiner = ModelRefiner(CannedBackend({"response": '{"ok": true}'}))
        assert await refiner.revise(sample(), 2.0, "why") == '{"ok": true}'
    asyncio.run(go())


def test_pipeline_accepts_model_backed_instances():
    config = PipelineConfig(verifier="model-backed", reasoner="model-backed",
                            refiner="model-backed")
    pipe = FeedbackPipeline(
        config,
        verifier=ModelVerifier(CannedBackend({"score": 2})),
        reasoner=ModelReasoner(CannedBackend({"rationale": "off the rails"})),
        refiner=ModelRefiner(CannedBackend({"response": '{"fixed": 1}'})))
    report = pipe.process_sync([sample()])
    assert len(report.quadruplets) == 1
    quad = report.quadruplets[0]
    assert (quad.score, quad.rationale) == (2.0, "off the rails")
    assert quad.refined == '{"fixed": 1}'


# --- the human review queue -------------------------------------------------

def test_queue_submission_settles_the_bucket():
    queue = FeedbackQueue(threshold=3.0)
    good = queue.put(sample(prompt="fine"))
    poor = queue.put(sample(prompt="shaky"))
    rows = queue.fetch()
    assert [r["item_id"] for r in rows] == [good, poor]
    assert queue.pending == 2

    assert queue.submit(good, score=4.5)["bucket"] == "passed"
    with pytest.raises(RefinementFailedError):
        queue.submit(poor, score=1.5)  # low verdict without a correction
    assert queue.pending == 1  # the refused submission kept the item parked
    verdict = queue.submit(poor, score=1.5, rationale="wrong register",
                           refined="a better answer")
    assert verdict["bucket"] == "quadruplet"
    assert queue.pending == 0
    assert [s.prompt for s, _ in queue.passed] == ["fine"]
    assert [q.prompt for q in queue.quadruplets] == ["shaky"]

    with pytest.raises(ConfigurationError):
        queue.submit(999, score=5.0)
    with pytest.raises(ConfigurationError):
        queue.submit(queue.put(sample()))  # no score from anywhere


def test_human_verifier_parks_whole_samples():
    queue = FeedbackQueue(threshold=3.0)
    pipe = FeedbackPipeline(PipelineConfig(verifier="human-queue"),
                            queue=queue)
    report = pipe.process_sync([sample(prompt="p1"), sample(prompt="p2")])
    assert report.accounted == 2 and len(report.parked) == 2
    assert queue.pending == 2
    assert "score" not in queue.fetch()[0]


def test_machine_scored_samples_park_with_presets():
    queue = FeedbackQueue(threshold=3.0)
    pipe = FeedbackPipeline(
        PipelineConfig(refiner="human-queue"),
        verifier=ScriptedVerifier(
            lambda s: 1.5 if s.prompt == "shaky" else 5.0),
        queue=queue)
    report = pipe.process_sync([sample(prompt="fine"), sample(prompt="shaky")])
    assert len(report.passed) == 1 and len(report.parked) == 1
    row = queue.fetch()[0]
    assert row["score"] == 1.5 and row["rationale"] == "negotiate"
    # The reviewer only owes the correction; score and rationale are set.
    verdict = queue.submit(row["item_id"], refined="a better answer")
    assert verdict == {"item_id": row["item_id"], "bucket": "quadruplet",
                       "score": 1.5}
    assert queue.quadruplets[0].rationale == "negotiate"


# --- dataset files ----------------------------------------------------------

def quads(n=3):
    return [Quadruplet(prompt="p%d" % i, response="r%d" % i,
                       score=1.0 + i * 0.5, refined="better %d" % i,
                       rationale="why %d" % i) for i in range(n)]


def test_dataset_rows_carry_exactly_the_contract_keys():
    quad = quads(1)[0]
    assert dataset_row(quad, "sft") == {"prompt": "p0", "response": "better 0"}
    assert dataset_row(quad, "rl") == {"prompt": "p0", "rejected": "r0",
                                       "chosen": "better 0", "score": 1.0}
    with pytest.raises(ConfigurationError):
        dataset_row(quad, "dpo")


def test_export_and_reload_round_trip(tmp_path):
    batch = quads(5)
    paths = export_datasets(batch, tmp_path, stem="run7")
    assert paths["sft"].name == "run7.sft.jsonl"
    assert paths["rl"].name == "run7.rl.jsonl"

    sft = load_dataset(paths["sft"])
    rl = load_dataset(paths["rl"])
    assert sft == [dataset_row(q, "sft") for q in batch]
    assert rl == [dataset_row(q, "rl") for q in batch]
    assert all(set(row) == {"prompt", "response"} for row in sft)
    assert all(set(row) == {"prompt", "rejected", "chosen", "score"}
               for row in rl)
    # Key order inside each line is part of the file's face.
    first = paths["sft"].read_text(encoding="utf-8").splitlines()[0]
    assert first.startswith('{"prompt":')


def test_export_kind_inference_and_errors(tmp_path):
    batch = quads(2)
    out = export_dataset(batch, tmp_path / "x.rl.jsonl")  # kind from suffix
    assert load_dataset(out)[0]["rejected"] == "r0"
    with pytest.raises(ConfigurationError):
        export_dataset(batch, tmp_path / "x.jsonl")
    with pytest.raises(EmptySetError):
        export_dataset([], tmp_path / "x.sft.jsonl")
