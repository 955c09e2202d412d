from __future__ import annotations

import pytest

from tracelens.analytics import build_topology, judge_reliability_report, node_usage_stats
from tracelens.bundle import EvaluationBundle, build_manifest
from tracelens.config import InputConfig, PipelineConfig, ServeConfig
from tracelens.ingest import load_corpus
from tracelens.insights import AggregatorConfig, aggregate
from tracelens.judging import JudgeConfig, ModeFlags, evaluate_corpus
from tracelens.mockjudge import MockJudge

from .fixture_corpus import write_langfuse_corpus

FIXED_CREATED_AT = "2026-02-01T00:00:00+00:00"


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    return write_langfuse_corpus(tmp_path_factory.mktemp("fixtures"))


@pytest.fixture(scope="session")
def fixture_corpus(corpus_dir):
    return load_corpus(corpus_dir, "langfuse").corpus


@pytest.fixture(scope="session")
def mock_judge_config():
    return JudgeConfig(model_name="mock-judge", backend="mock", max_parallel=2)


@pytest.fixture(scope="session")
def fixture_records(fixture_corpus, mock_judge_config):
    result = evaluate_corpus(fixture_corpus, mock_judge_config, MockJudge(), ModeFlags())
    assert not result.failures
    return result.records


@pytest.fixture(scope="session")
def fixture_bundle(fixture_corpus, fixture_records):
    """Fully assembled in-memory bundle over the fixture corpus."""
    system_insights, node_insights = aggregate(
        fixture_records, fixture_corpus, AggregatorConfig(backend="mock")
    )
    manifest = build_manifest(
        created_at=FIXED_CREATED_AT,
        config_snapshot={"judge": {"model_name": "mock-judge"}},
        corpus=fixture_corpus,
        judge_model="mock-judge",
        judge_backend="mock",
    )
    return EvaluationBundle(
        manifest=manifest,
        corpus=fixture_corpus,
        records=fixture_records,
        system_insights=system_insights,
        node_insights=node_insights,
        topology=build_topology(fixture_corpus),
        node_stats=node_usage_stats(fixture_corpus, fixture_records, node_insights),
        reliability=judge_reliability_report(fixture_records, fixture_corpus),
    )


@pytest.fixture()
def mock_pipeline_config(corpus_dir, tmp_path):
    return PipelineConfig(
        input=InputConfig(path=str(corpus_dir), adapter="langfuse"),
        judge=JudgeConfig(model_name="mock-judge", backend="mock", max_parallel=2),
        modes=ModeFlags(),
        aggregator=AggregatorConfig(backend="mock"),
        output_path=str(tmp_path / "results"),
        serve=ServeConfig(),
    )
