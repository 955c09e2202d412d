from __future__ import annotations

import yaml
from click.testing import CliRunner

from tracelens.cli import main


def _config_file(tmp_path, corpus_dir, **overrides):
    data = {
        "input": {"path": str(corpus_dir), "adapter": "langfuse"},
        "judge": {"model_name": "mock-judge", "backend": "mock"},
        "aggregator": {"backend": "mock"},
        "output_path": str(tmp_path / "out"),
    }
    data.update(overrides)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_validate_ok(tmp_path, corpus_dir):
    result = CliRunner().invoke(main, ["validate", "-c", str(_config_file(tmp_path, corpus_dir))])
    assert result.exit_code == 0
    assert "config OK" in result.output


def test_validate_bad_config_exits_2(tmp_path, corpus_dir):
    path = _config_file(tmp_path, corpus_dir, spurious_key=1)
    result = CliRunner().invoke(main, ["validate", "-c", str(path)])
    assert result.exit_code == 2
    assert "spurious_key" in result.output


def test_run_writes_bundle(tmp_path, corpus_dir):
    path = _config_file(tmp_path, corpus_dir)
    result = CliRunner().invoke(main, ["run", "-c", str(path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "out" / "results.zip").is_file()


def test_run_with_empty_corpus_exits_1(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    path = _config_file(tmp_path, empty)
    result = CliRunner().invoke(main, ["run", "-c", str(path)])
    assert result.exit_code == 1
    assert "pipeline error" in result.output


def test_run_with_config_error_exits_2(tmp_path, corpus_dir):
    path = _config_file(tmp_path, corpus_dir, modes={"step": False, "trace": False, "rubric": False})
    result = CliRunner().invoke(main, ["run", "-c", str(path)])
    assert result.exit_code == 2
