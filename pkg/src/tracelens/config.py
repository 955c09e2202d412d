"""YAML pipeline configuration: parsing, defaulting, strict validation.

Unknown keys are errors (typo safety), and every complaint carries the
dotted path of the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigInvalidError, ConfigParseError
from .insights import AggregatorConfig
from .judging import DEFAULT_STEP_DIMENSIONS, DEFAULT_TRACE_DIMENSIONS, JudgeConfig, ModeFlags
from .prompts import load_templates

DEFAULT_OUTPUT_PATH = "results"
DEFAULT_PORT = 8050


@dataclass(frozen=True)
class InputConfig:
    path: str
    adapter: str = "langfuse"


@dataclass(frozen=True)
class ServeConfig:
    bind_address: str = "127.0.0.1"
    port: int = DEFAULT_PORT


@dataclass(frozen=True)
class PipelineConfig:
    input: InputConfig
    judge: JudgeConfig
    modes: ModeFlags = ModeFlags()
    aggregator: AggregatorConfig = AggregatorConfig(backend="llm")
    ground_truth_key: str = "success"
    output_path: str = DEFAULT_OUTPUT_PATH
    serve: ServeConfig = ServeConfig()

    def snapshot(self) -> dict[str, Any]:
        """JSON-ready view of the effective config (prompt texts elided)."""
        return {
            "input": {"path": self.input.path, "adapter": self.input.adapter},
            "judge": {
                "model_name": self.judge.model_name,
                "endpoint": self.judge.endpoint,
                "backend": self.judge.backend,
                "temperature": self.judge.temperature,
                "max_parallel": self.judge.max_parallel,
                "max_retries": self.judge.max_retries,
                "cache_dir": self.judge.cache_dir,
                "step_dimensions": list(self.judge.step_dimensions),
                "trace_dimensions": list(self.judge.trace_dimensions),
                "max_prompt_chars": self.judge.max_prompt_chars,
            },
            "modes": {"step": self.modes.step, "trace": self.modes.trace, "rubric": self.modes.rubric},
            "aggregator": {
                "backend": self.aggregator.backend,
                "min_support": self.aggregator.min_support,
                "max_insights": self.aggregator.max_insights,
                "praise_threshold": self.aggregator.praise_threshold,
                "min_pool_size": self.aggregator.min_pool_size,
                "batch_size": self.aggregator.batch_size,
            },
            "ground_truth_key": self.ground_truth_key,
            "output_path": self.output_path,
            "serve": {"bind_address": self.serve.bind_address, "port": self.serve.port},
        }


class _Section:
    """One mapping level of the config, with unknown-key rejection."""

    def __init__(self, raw: Any, path: str) -> None:
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigInvalidError(f"{path}: expected a mapping, got {type(raw).__name__}")
        self.raw = raw
        self.path = path
        self.seen: set[str] = set()

    def get(self, key: str, default: Any = None, *, required: bool = False,
            kind: Optional[type | tuple] = None) -> Any:
        self.seen.add(key)
        if key not in self.raw:
            if required:
                raise ConfigInvalidError(f"{self.path}.{key}: required field missing")
            return default
        value = self.raw[key]
        if kind is not None and not isinstance(value, kind):
            expected = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            raise ConfigInvalidError(
                f"{self.path}.{key}: expected {expected}, got {type(value).__name__}"
            )
        return value

    def sub(self, key: str, *, required: bool = False) -> "_Section":
        self.seen.add(key)
        if key not in self.raw:
            if required:
                raise ConfigInvalidError(f"{self.path}.{key}: required section missing")
            return _Section({}, f"{self.path}.{key}")
        return _Section(self.raw[key], f"{self.path}.{key}")

    def finish(self) -> None:
        unknown = set(self.raw) - self.seen
        if unknown:
            names = ", ".join(f"{self.path}.{key}" for key in sorted(unknown))
            raise ConfigInvalidError(f"unknown config key(s): {names}")


def _string_list(section: _Section, key: str, default: tuple[str, ...]) -> tuple[str, ...]:
    value = section.get(key, list(default), kind=list)
    if not value or not all(isinstance(v, str) and v.strip() for v in value):
        raise ConfigInvalidError(f"{section.path}.{key}: must be a non-empty list of strings")
    return tuple(value)


def parse_config(data: dict[str, Any]) -> PipelineConfig:
    root = _Section(data, "config")

    input_section = root.sub("input", required=True)
    input_cfg = InputConfig(
        path=input_section.get("path", required=True, kind=str),
        adapter=input_section.get("adapter", "langfuse", kind=str),
    )
    input_section.finish()

    judge_section = root.sub("judge", required=True)
    backend = judge_section.get("backend", "http", kind=str)
    if backend not in ("http", "mock"):
        raise ConfigInvalidError("config.judge.backend: must be 'http' or 'mock'")
    endpoint = judge_section.get("endpoint", "", kind=str)
    if backend == "http" and not endpoint:
        raise ConfigInvalidError("config.judge.endpoint: required for the http backend")
    prompt_dir = judge_section.get("prompt_dir", None, kind=str)
    max_parallel = judge_section.get("max_parallel", 4, kind=int)
    if max_parallel < 1:
        raise ConfigInvalidError("config.judge.max_parallel: must be >= 1")
    try:
        judge_cfg = JudgeConfig(
            model_name=judge_section.get("model_name", required=True, kind=str),
            endpoint=endpoint,
            backend=backend,
            mode_prompts=load_templates(prompt_dir),
            step_dimensions=_string_list(judge_section, "step_dimensions", DEFAULT_STEP_DIMENSIONS),
            trace_dimensions=_string_list(judge_section, "trace_dimensions", DEFAULT_TRACE_DIMENSIONS),
            max_parallel=max_parallel,
            max_retries=judge_section.get("max_retries", 3, kind=int),
            temperature=float(judge_section.get("temperature", 0.0, kind=(int, float))),
            cache_dir=judge_section.get("cache_dir", None, kind=str),
            max_prompt_chars=judge_section.get("max_prompt_chars", 48_000, kind=int),
            timeout_seconds=float(judge_section.get("timeout_seconds", 120.0, kind=(int, float))),
        )
    except OSError as exc:
        raise ConfigInvalidError(f"config.judge.prompt_dir: {exc}") from exc
    judge_section.finish()

    modes_section = root.sub("modes")
    try:
        modes = ModeFlags(
            step=modes_section.get("step", True, kind=bool),
            trace=modes_section.get("trace", True, kind=bool),
            rubric=modes_section.get("rubric", True, kind=bool),
        )
    except ValueError as exc:
        raise ConfigInvalidError(f"config.modes: {exc}") from exc
    modes_section.finish()

    agg_section = root.sub("aggregator")
    agg_backend = agg_section.get("backend", "llm", kind=str)
    if agg_backend not in ("llm", "mock"):
        raise ConfigInvalidError("config.aggregator.backend: must be 'llm' or 'mock'")
    threshold = float(agg_section.get("praise_threshold", 0.7, kind=(int, float)))
    if not 0.0 <= threshold <= 1.0:
        raise ConfigInvalidError("config.aggregator.praise_threshold: must lie in [0, 1]")
    aggregator = AggregatorConfig(
        backend=agg_backend,
        min_support=agg_section.get("min_support", 2, kind=int),
        max_insights=agg_section.get("max_insights", 20, kind=int),
        praise_threshold=threshold,
        min_pool_size=agg_section.get("min_pool_size", 2, kind=int),
        batch_size=agg_section.get("batch_size", 8, kind=int),
    )
    if aggregator.min_support < 1 or aggregator.max_insights < 1:
        raise ConfigInvalidError("config.aggregator: min_support and max_insights must be >= 1")
    agg_section.finish()

    serve_section = root.sub("serve")
    serve_cfg = ServeConfig(
        bind_address=serve_section.get("bind_address", "127.0.0.1", kind=str),
        port=serve_section.get("port", DEFAULT_PORT, kind=int),
    )
    serve_section.finish()

    config = PipelineConfig(
        input=input_cfg,
        judge=judge_cfg,
        modes=modes,
        aggregator=aggregator,
        ground_truth_key=root.get("ground_truth_key", "success", kind=str),
        output_path=root.get("output_path", DEFAULT_OUTPUT_PATH, kind=str),
        serve=serve_cfg,
    )
    root.finish()
    return config


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"invalid YAML in {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: top level must be a mapping")
    return parse_config(data)
