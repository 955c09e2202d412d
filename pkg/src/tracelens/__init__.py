"""tracelens: multi-level LLM-judge evaluation and diagnosis for agent traces."""

from .analytics import (
    NodeStats,
    ReliabilityReport,
    ScorePrediction,
    TopologyGraph,
    build_topology,
    compute_auc,
    judge_reliability_report,
    node_usage_stats,
    predict_trace_score,
)
from .bundle import EvaluationBundle, FORMAT_VERSION, read_bundle, write_bundle
from .config import PipelineConfig, load_config
from .ingest import (
    convert_generic,
    group_steps_by_node,
    load_corpus,
    parse_langfuse_export,
    validate_trace,
)
from .insights import (
    AggregatorConfig,
    FeedbackPool,
    Insight,
    InsightSet,
    aggregate,
    assign_instances,
    build_pools,
    cluster_issues,
    extract_issue_statements,
)
from .judging import (
    JudgeConfig,
    ModeFlags,
    RubricSet,
    RubricVerdicts,
    StepCritique,
    TraceCritique,
    TraceEvaluationRecord,
    evaluate_corpus,
    evaluate_step,
    evaluate_trace,
    generate_rubrics,
    parse_judge_response,
    verify_rubrics,
)
from .mockjudge import MockJudge
from .model import Trace, TraceCorpus, TraceStep, ValidationReport
from .pipeline import run_pipeline
from .server import create_app, serve
from .transport import HttpJudgeBackend, LlmClient

__version__ = "0.1.0"

__all__ = [
    "AggregatorConfig",
    "EvaluationBundle",
    "FORMAT_VERSION",
    "FeedbackPool",
    "HttpJudgeBackend",
    "Insight",
    "InsightSet",
    "JudgeConfig",
    "LlmClient",
    "MockJudge",
    "ModeFlags",
    "NodeStats",
    "PipelineConfig",
    "ReliabilityReport",
    "RubricSet",
    "RubricVerdicts",
    "ScorePrediction",
    "StepCritique",
    "TopologyGraph",
    "Trace",
    "TraceCorpus",
    "TraceCritique",
    "TraceEvaluationRecord",
    "TraceStep",
    "ValidationReport",
    "aggregate",
    "assign_instances",
    "build_pools",
    "build_topology",
    "cluster_issues",
    "compute_auc",
    "convert_generic",
    "create_app",
    "evaluate_corpus",
    "evaluate_step",
    "evaluate_trace",
    "extract_issue_statements",
    "generate_rubrics",
    "group_steps_by_node",
    "judge_reliability_report",
    "load_config",
    "load_corpus",
    "node_usage_stats",
    "parse_judge_response",
    "parse_langfuse_export",
    "predict_trace_score",
    "read_bundle",
    "run_pipeline",
    "serve",
    "validate_trace",
    "verify_rubrics",
    "write_bundle",
]
