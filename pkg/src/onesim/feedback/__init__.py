"""Score, explain, and refine captured decisions; export tuning data."""
from .datasets import (
    DATASET_KINDS,
    SUFFIXES,
    dataset_row,
    export_dataset,
    export_datasets,
    load_dataset,
)
from .pipeline import FeedbackPipeline, PipelineConfig, PipelineReport
from .records import (
    SCORE_MAX,
    SCORE_MIN,
    CaptureSink,
    FailedRefinement,
    Quadruplet,
    Sample,
    check_score,
)
from .stages import (
    STAGE_KINDS,
    FeedbackQueue,
    ModelReasoner,
    ModelRefiner,
    ModelVerifier,
    ScriptedReasoner,
    ScriptedRefiner,
    ScriptedVerifier,
    explain_node,
    refit_json,
    score_parseable,
)

__all__ = [
    "DATASET_KINDS",
    "SCORE_MAX",
    "SCORE_MIN",
    "STAGE_KINDS",
    "SUFFIXES",
    "CaptureSink",
    "FailedRefinement",
    "FeedbackPipeline",
    "FeedbackQueue",
    "ModelReasoner",
    "ModelRefiner",
    "ModelVerifier",
    "PipelineConfig",
    "PipelineReport",
    "Quadruplet",
    "Sample",
    "ScriptedReasoner",
    "ScriptedRefiner",
    "ScriptedVerifier",
    "check_score",
    "dataset_row",
    "explain_node",
    "export_dataset",
    "export_datasets",
    "load_dataset",
    "refit_json",
    "score_parseable",
]
