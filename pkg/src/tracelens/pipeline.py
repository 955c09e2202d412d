"""End-to-end run: load traces, judge, aggregate, analyze, write the bundle."""

from __future__ import annotations

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

from .analytics import build_topology, judge_reliability_report, node_usage_stats
from .bundle import EvaluationBundle, build_manifest, write_bundle
from .config import PipelineConfig
from .errors import NoGroundTruth
from .ingest import load_corpus
from .insights import aggregate, make_backend
from .judging import JudgeBackend, evaluate_corpus
from .mockjudge import MockJudge
from .transport import HttpJudgeBackend, LlmClient

logger = logging.getLogger(__name__)

BUNDLE_FILENAME = "results.zip"


def make_judge_backend(config: PipelineConfig) -> JudgeBackend:
    if config.judge.backend == "mock":
        return MockJudge(model_name=config.judge.model_name)
    return HttpJudgeBackend(config.judge)


def bundle_path_for(config: PipelineConfig) -> Path:
    out = Path(config.output_path)
    return out if out.suffix == ".zip" else out / BUNDLE_FILENAME


def run_pipeline(
    config: PipelineConfig,
    *,
    progress: Optional[Callable[[int, int, str], None]] = None,
    clock: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
) -> Path:
    """Execute every stage and return the written bundle path.

    Per-trace and per-pool failures are recorded in the manifest; only a
    stage-level failure (no corpus, every trace failing) aborts the run.
    """
    logger.info("loading corpus from %s (adapter: %s)", config.input.path, config.input.adapter)
    load_result = load_corpus(
        config.input.path,
        config.input.adapter,
        ground_truth_key=config.ground_truth_key,
    )
    corpus = load_result.corpus
    logger.info("corpus ready: %d traces, %d nodes", corpus.n_traces, len(corpus.node_catalog))

    backend = make_judge_backend(config)
    evaluation = evaluate_corpus(corpus, config.judge, backend, config.modes, progress=progress)
    records = evaluation.records
    logger.info("evaluated %d/%d traces", len(records), corpus.n_traces)

    aggregator_client = None
    if config.aggregator.backend == "llm":
        aggregator_client = (
            backend.client if isinstance(backend, HttpJudgeBackend) else LlmClient.from_config(config.judge)
        )
    aggregator_backend = make_backend(config.aggregator, client=aggregator_client)
    system_insights, node_insights = aggregate(records, corpus, config.aggregator, aggregator_backend)
    logger.info(
        "aggregated insights: %d system, %d node scopes",
        len(system_insights.insights),
        len(node_insights),
    )

    topology = build_topology(corpus)
    node_stats = node_usage_stats(corpus, records, node_insights)
    notes: list[str] = []
    reliability = None
    if corpus.has_ground_truth:
        try:
            reliability = judge_reliability_report(records, corpus)
        except NoGroundTruth:
            pass
    else:
        notes.append("no ground truth: reliability report omitted")

    manifest = build_manifest(
        created_at=clock().isoformat(),
        config_snapshot=config.snapshot(),
        corpus=corpus,
        judge_model=config.judge.model_name,
        judge_backend=config.judge.backend,
        notes=notes,
        load_failures=[f.to_dict() for f in load_result.summary.failures],
        evaluation_failures=evaluation.failures,
    )
    bundle = EvaluationBundle(
        manifest=manifest,
        corpus=corpus,
        records=records,
        system_insights=system_insights,
        node_insights=node_insights,
        topology=topology,
        node_stats=node_stats,
        reliability=reliability,
    )
    path = write_bundle(bundle, bundle_path_for(config))
    logger.info("bundle written to %s", path)
    return path
