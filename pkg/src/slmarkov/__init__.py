"""Markov-chain channel identification with explicit statistical uncertainty.

The package combines a subjective-logic opinion algebra, a windowed
online identifier for time-varying transition matrices, a seedable
channel simulator, and a packet-delay classification front end, plus a
CLI that runs them side by side with a classical baseline.
"""

from .opinions import (
    Opinion,
    EvidenceVector,
    SubjectiveLogicError,
    DogmaticOpinionError,
    FusionDomainError,
    project,
    opinion_from_evidence,
    evidence_from_opinion,
    dirichlet_pdf,
    cumulative_fuse,
    trust_discount,
    degree_of_conflict,
)
from .identifier import (
    IdentifierConfig,
    WindowStats,
    IdentifierOutput,
    OpinionMatrix,
    ObservationError,
    ConfigurationError,
    accumulate_window,
    window_opinions,
    step,
    run,
    run_with_stats,
    classical_estimate,
)
from .channel import (
    ScenarioSpec,
    Segment,
    ObservationTrace,
    ScenarioError,
    step_chain,
    generate,
    builtin_lte_scenario,
    scenario_from_json,
    scenario_to_json,
    load_scenario,
)
from .delays import (
    DelayRecord,
    ThresholdState,
    DelayPipelineConfig,
    DelayTraceError,
    classify,
    update_thresholds,
    pipeline,
    synthetic_delay_trace,
)
from .report import (
    RunReport,
    RunSummary,
    WindowRow,
    build_report,
    window_truth,
    summarize,
    write_report_csv,
    read_report_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Opinion",
    "EvidenceVector",
    "SubjectiveLogicError",
    "DogmaticOpinionError",
    "FusionDomainError",
    "project",
    "opinion_from_evidence",
    "evidence_from_opinion",
    "dirichlet_pdf",
    "cumulative_fuse",
    "trust_discount",
    "degree_of_conflict",
    "IdentifierConfig",
    "WindowStats",
    "IdentifierOutput",
    "OpinionMatrix",
    "ObservationError",
    "ConfigurationError",
    "accumulate_window",
    "window_opinions",
    "step",
    "run",
    "run_with_stats",
    "classical_estimate",
    "ScenarioSpec",
    "Segment",
    "ObservationTrace",
    "ScenarioError",
    "step_chain",
    "generate",
    "builtin_lte_scenario",
    "scenario_from_json",
    "scenario_to_json",
    "load_scenario",
    "DelayRecord",
    "ThresholdState",
    "DelayPipelineConfig",
    "DelayTraceError",
    "classify",
    "update_thresholds",
    "pipeline",
    "synthetic_delay_trace",
    "RunReport",
    "RunSummary",
    "WindowRow",
    "build_report",
    "window_truth",
    "summarize",
    "write_report_csv",
    "read_report_csv",
]
