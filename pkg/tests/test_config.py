from __future__ import annotations

import pytest
import yaml

from tracelens.config import load_config
from tracelens.errors import ConfigInvalidError, ConfigParseError

MINIMAL = {
    "input": {"path": "traces/"},
    "judge": {"model_name": "judge-1", "endpoint": "https://llm.example/v1/chat/completions"},
}


def _write(tmp_path, data):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_minimal_config_gets_defaults(tmp_path):
    config = load_config(_write(tmp_path, MINIMAL))
    assert config.input.adapter == "langfuse"
    assert config.modes.step and config.modes.trace and config.modes.rubric
    assert config.aggregator.min_support == 2
    assert config.aggregator.max_insights == 20
    assert config.aggregator.praise_threshold == 0.7
    assert config.judge.temperature == 0.0
    assert config.judge.max_parallel == 4
    assert config.judge.step_dimensions == ("correctness", "completeness", "clarity")
    assert config.judge.trace_dimensions == ("execution quality", "final deliverable")
    assert config.output_path == "results"
    assert config.ground_truth_key == "success"
    # all four mode templates present
    assert set(config.judge.mode_prompts) == {"step", "trace", "rubric_gen", "rubric_verify"}


def test_all_modes_false_is_invalid(tmp_path):
    data = dict(MINIMAL, modes={"step": False, "trace": False, "rubric": False})
    with pytest.raises(ConfigInvalidError):
        load_config(_write(tmp_path, data))


def test_unknown_key_is_named(tmp_path):
    data = dict(MINIMAL)
    data["judgee"] = {"model_name": "oops"}
    with pytest.raises(ConfigInvalidError, match="judgee"):
        load_config(_write(tmp_path, data))


def test_unknown_nested_key_is_named(tmp_path):
    data = {"input": {"path": "traces/", "adaptor": "langfuse"}, "judge": MINIMAL["judge"]}
    with pytest.raises(ConfigInvalidError, match="input.adaptor"):
        load_config(_write(tmp_path, data))


def test_http_backend_requires_endpoint(tmp_path):
    data = {"input": {"path": "p"}, "judge": {"model_name": "m"}}
    with pytest.raises(ConfigInvalidError, match="endpoint"):
        load_config(_write(tmp_path, data))


def test_mock_backend_needs_no_endpoint(tmp_path):
    data = {"input": {"path": "p"}, "judge": {"model_name": "m", "backend": "mock"}}
    config = load_config(_write(tmp_path, data))
    assert config.judge.backend == "mock"


def test_invalid_yaml_is_a_parse_error(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("input: [unclosed", encoding="utf-8")
    with pytest.raises(ConfigParseError):
        load_config(path)


def test_missing_file_is_a_parse_error(tmp_path):
    with pytest.raises(ConfigParseError):
        load_config(tmp_path / "absent.yaml")


def test_wrong_type_reports_field(tmp_path):
    data = dict(MINIMAL, modes={"step": "yes"})
    with pytest.raises(ConfigInvalidError, match="modes.step"):
        load_config(_write(tmp_path, data))


def test_praise_threshold_range(tmp_path):
    data = dict(MINIMAL, aggregator={"praise_threshold": 1.5})
    with pytest.raises(ConfigInvalidError, match="praise_threshold"):
        load_config(_write(tmp_path, data))


def test_prompt_dir_override(tmp_path):
    prompt_dir = tmp_path / "prompts"
    prompt_dir.mkdir()
    (prompt_dir / "step.txt").write_text("custom {task} {input} {output}", encoding="utf-8")
    data = dict(MINIMAL)
    data["judge"] = dict(MINIMAL["judge"], prompt_dir=str(prompt_dir))
    config = load_config(_write(tmp_path, data))
    assert config.judge.mode_prompts["step"].startswith("custom")
    assert "{trace}" in config.judge.mode_prompts["trace"]  # untouched default


def test_snapshot_round_trips_through_yaml(tmp_path):
    config = load_config(_write(tmp_path, MINIMAL))
    snapshot = config.snapshot()
    assert snapshot["judge"]["model_name"] == "judge-1"
    assert yaml.safe_load(yaml.safe_dump(snapshot)) == snapshot
