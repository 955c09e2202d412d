from __future__ import annotations

import dataclasses
import json
import zipfile
from datetime import datetime, timezone

import pytest

from tracelens.bundle import read_bundle
from tracelens.config import InputConfig
from tracelens.errors import EmptyCorpus
from tracelens.pipeline import run_pipeline

from .fixture_corpus import langfuse_document, write_langfuse_corpus
from .util import normalized_members

FIXED_CLOCK = lambda: datetime(2026, 2, 1, tzinfo=timezone.utc)  # noqa: E731


def test_run_pipeline_produces_loadable_bundle(mock_pipeline_config):
    path = run_pipeline(mock_pipeline_config, clock=FIXED_CLOCK)
    assert path.name == "results.zip"
    bundle = read_bundle(path)
    assert bundle.corpus.n_traces == 10
    assert len(bundle.records) == 10
    assert bundle.reliability is not None
    assert bundle.manifest["judge"] == {"model_name": "mock-judge", "backend": "mock"}


def test_reruns_are_identical_modulo_timestamps(mock_pipeline_config, tmp_path):
    first = run_pipeline(mock_pipeline_config, clock=FIXED_CLOCK)
    second_config = dataclasses.replace(mock_pipeline_config, output_path=str(tmp_path / "again"))
    second = run_pipeline(second_config, clock=FIXED_CLOCK)
    assert normalized_members(first) == normalized_members(second)


def test_without_ground_truth_reliability_is_omitted_and_noted(tmp_path, mock_pipeline_config):
    directory = tmp_path / "nogt"
    directory.mkdir()
    for trace_id in ("t01", "t02", "t03"):
        doc = langfuse_document(trace_id)
        del doc["metadata"]["success"]
        (directory / f"{trace_id}.json").write_text(json.dumps(doc), encoding="utf-8")
    config = dataclasses.replace(
        mock_pipeline_config,
        input=InputConfig(path=str(directory), adapter="langfuse"),
        output_path=str(tmp_path / "out"),
    )
    path = run_pipeline(config, clock=FIXED_CLOCK)
    with zipfile.ZipFile(path) as zf:
        assert "analytics/reliability.json" not in zf.namelist()
    manifest = read_bundle(path).manifest
    assert any("no ground truth" in note for note in manifest["notes"])


def test_empty_input_directory_is_fatal(tmp_path, mock_pipeline_config):
    empty = tmp_path / "empty"
    empty.mkdir()
    config = dataclasses.replace(
        mock_pipeline_config, input=InputConfig(path=str(empty), adapter="langfuse")
    )
    with pytest.raises(EmptyCorpus):
        run_pipeline(config)


def test_load_failures_recorded_in_manifest(tmp_path, mock_pipeline_config):
    directory = write_langfuse_corpus(tmp_path)
    (directory / "zz-broken.json").write_text("{oops", encoding="utf-8")
    config = dataclasses.replace(
        mock_pipeline_config,
        input=InputConfig(path=str(directory), adapter="langfuse"),
        output_path=str(tmp_path / "out"),
    )
    bundle = read_bundle(run_pipeline(config, clock=FIXED_CLOCK))
    assert bundle.corpus.n_traces == 10
    assert len(bundle.manifest["load_failures"]) == 1
    assert bundle.manifest["load_failures"][0]["path"] == "zz-broken.json"


def test_explicit_zip_output_path(mock_pipeline_config, tmp_path):
    config = dataclasses.replace(mock_pipeline_config, output_path=str(tmp_path / "custom.zip"))
    path = run_pipeline(config, clock=FIXED_CLOCK)
    assert path == tmp_path / "custom.zip"
    assert read_bundle(path).corpus.n_traces == 10
