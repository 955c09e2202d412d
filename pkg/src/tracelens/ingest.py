"""Parsers that turn observability exports into the trace IR.

Two adapters ship by default:

* ``langfuse``: one LangFuse-style trace export per JSON file, a trace
  object with an ``observations`` array. Observations of type GENERATION
  become steps; spans and events are kept as metadata only.
* ``generic``: the escape hatch, a JSON file with ``trace_id``,
  ``task_text`` and a ``steps`` list of (node_id, input_text, output_text)
  records in execution order.
"""

from __future__ import annotations

import json
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .errors import (
    EmptyCorpus,
    EmptyRecords,
    MalformedDocument,
    MissingTask,
    NoLlmCalls,
    TraceParseError,
    UnknownAdapter,
)
from .model import Trace, TraceCorpus, TraceStep, ValidationIssue, ValidationReport, _parse_ts

logger = logging.getLogger(__name__)

DEFAULT_GROUND_TRUTH_KEY = "success"
DEFAULT_NODE_ID = "default"


def flatten_message_content(value: Any) -> str:
    """Render a prompt/completion payload as plain text.

    Chat message lists become role-labeled lines; opaque structures fall
    back to deterministic JSON so nothing is silently dropped.
    """
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        parts = []
        for item in value:
            if isinstance(item, dict) and "role" in item:
                parts.append(f"{item.get('role', '')}: {flatten_message_content(item.get('content'))}")
            elif isinstance(item, dict) and item.get("type") == "text":
                parts.append(str(item.get("text", "")))
            else:
                parts.append(flatten_message_content(item))
        return "\n".join(parts)
    if isinstance(value, dict):
        if "messages" in value and isinstance(value["messages"], list):
            return flatten_message_content(value["messages"])
        for key in ("content", "text", "completion", "query", "input"):
            if isinstance(value.get(key), (str, list)):
                return flatten_message_content(value[key])
        return json.dumps(value, sort_keys=True, ensure_ascii=False)
    return str(value)


def parse_ground_truth(value: Any) -> float:
    """Normalize a label to the unit interval; out-of-range numerics are rejected."""
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("success", "true", "pass", "passed", "1"):
            return 1.0
        if lowered in ("failure", "false", "fail", "failed", "0"):
            return 0.0
        raise MalformedDocument(f"unrecognized ground-truth label {value!r}")
    if isinstance(value, (int, float)):
        score = float(value)
        if not 0.0 <= score <= 1.0:
            raise MalformedDocument(f"ground-truth score {score} outside [0, 1]")
        return score
    raise MalformedDocument(f"unsupported ground-truth value {value!r}")


def _obs_field(obs: dict[str, Any], *names: str) -> Any:
    for name in names:
        if name in obs:
            return obs[name]
    return None


def _node_id_for(obs: dict[str, Any], spans_by_id: dict[str, dict[str, Any]]) -> str:
    """Attribution chain: explicit agent attribute, enclosing span name, then a literal default."""
    metadata = obs.get("metadata") or {}
    if isinstance(metadata, dict):
        for key in ("agent", "component", "node"):
            value = metadata.get(key)
            if isinstance(value, str) and value.strip():
                return value.strip()
    parent_id = _obs_field(obs, "parentObservationId", "parent_observation_id")
    while parent_id:
        parent = spans_by_id.get(parent_id)
        if parent is None:
            break
        name = parent.get("name")
        if isinstance(name, str) and name.strip():
            return name.strip()
        parent_id = _obs_field(parent, "parentObservationId", "parent_observation_id")
    return DEFAULT_NODE_ID


def parse_langfuse_export(
    document: dict[str, Any],
    *,
    ground_truth_key: str = DEFAULT_GROUND_TRUTH_KEY,
) -> Trace:
    """Convert one LangFuse-style trace export into a Trace.

    Steps are exactly the GENERATION observations, ordered by start time
    with ties broken by source-document order (deterministic re-parse).
    Non-LLM spans are retained compactly under ``trace.extra``.
    """
    if not isinstance(document, dict):
        raise MalformedDocument("trace export must be a JSON object")

    trace_id = document.get("id") or document.get("trace_id")
    if not trace_id or not isinstance(trace_id, str):
        raise MalformedDocument("trace export has no id")

    observations = document.get("observations")
    if not isinstance(observations, list):
        raise MalformedDocument(f"trace {trace_id}: missing observations array")

    task_text = flatten_message_content(document.get("input")).strip()
    if not task_text:
        raise MissingTask(f"trace {trace_id}: no task/input text at trace root")

    spans_by_id: dict[str, dict[str, Any]] = {}
    generations: list[tuple[int, dict[str, Any]]] = []
    other_spans: list[dict[str, Any]] = []
    for position, obs in enumerate(observations):
        if not isinstance(obs, dict):
            raise MalformedDocument(f"trace {trace_id}: observation {position} is not an object")
        obs_id = obs.get("id")
        if isinstance(obs_id, str):
            spans_by_id[obs_id] = obs
        obs_type = str(obs.get("type", "")).upper()
        if obs_type == "GENERATION":
            generations.append((position, obs))
        else:
            other_spans.append(
                {"id": obs.get("id"), "name": obs.get("name"), "type": obs.get("type")}
            )

    if not generations:
        raise NoLlmCalls(f"trace {trace_id}: no generation observations")

    def sort_key(entry: tuple[int, dict[str, Any]]):
        position, obs = entry
        started = _parse_ts(_obs_field(obs, "startTime", "start_time", "startedAt"))
        # timestamped first (by time), untimestamped keep source order at the end
        return (0, started.timestamp()) if started is not None else (1, float(position))

    generations.sort(key=sort_key)  # stable: ties keep source-document order

    steps = []
    for index, (_, obs) in enumerate(generations):
        steps.append(
            TraceStep(
                step_index=index,
                node_id=_node_id_for(obs, spans_by_id),
                input_text=flatten_message_content(obs.get("input")),
                output_text=flatten_message_content(obs.get("output")),
                started_at=_parse_ts(_obs_field(obs, "startTime", "start_time", "startedAt")),
                ended_at=_parse_ts(_obs_field(obs, "endTime", "end_time", "endedAt")),
                model_name=_obs_field(obs, "model", "model_name"),
                extra={"observation_id": obs.get("id")},
            )
        )

    metadata = document.get("metadata") or {}
    ground_truth = None
    if isinstance(metadata, dict) and ground_truth_key in metadata:
        ground_truth = parse_ground_truth(metadata[ground_truth_key])

    extra: dict[str, Any] = {"name": document.get("name")}
    if other_spans:
        extra["non_llm_spans"] = other_spans
    if isinstance(metadata, dict) and metadata:
        extra["metadata"] = metadata

    return Trace(
        trace_id=trace_id,
        task_text=task_text,
        steps=tuple(steps),
        ground_truth=ground_truth,
        source="langfuse",
        extra=extra,
    )


def convert_generic(
    records: list[tuple[str, str, str, dict[str, Any]]],
    *,
    trace_id: str,
    task_text: str,
    ground_truth: Optional[float] = None,
    extra: Optional[dict[str, Any]] = None,
) -> Trace:
    """Build a Trace from (node_id, input_text, output_text, metadata) records.

    step_index follows list position; this is the escape hatch for trace
    formats with no dedicated adapter.
    """
    if not records:
        raise EmptyRecords(f"trace {trace_id}: no records")
    steps = tuple(
        TraceStep(
            step_index=i,
            node_id=node_id,
            input_text=input_text,
            output_text=output_text,
            started_at=_parse_ts(meta.get("started_at")) if meta else None,
            ended_at=_parse_ts(meta.get("ended_at")) if meta else None,
            model_name=meta.get("model_name") if meta else None,
            extra=dict(meta or {}),
        )
        for i, (node_id, input_text, output_text, meta) in enumerate(records)
    )
    return Trace(
        trace_id=trace_id,
        task_text=task_text,
        steps=steps,
        ground_truth=ground_truth,
        source="generic",
        extra=dict(extra or {}),
    )


def _parse_generic_document(
    document: dict[str, Any],
    *,
    ground_truth_key: str = DEFAULT_GROUND_TRUTH_KEY,
) -> Trace:
    if not isinstance(document, dict):
        raise MalformedDocument("generic trace must be a JSON object")
    trace_id = document.get("trace_id")
    if not trace_id:
        raise MalformedDocument("generic trace has no trace_id")
    task_text = str(document.get("task_text", "")).strip()
    if not task_text:
        raise MissingTask(f"trace {trace_id}: task_text missing")
    raw_steps = document.get("steps")
    if not isinstance(raw_steps, list) or not raw_steps:
        raise EmptyRecords(f"trace {trace_id}: steps missing or empty")
    records = []
    for raw in raw_steps:
        if not isinstance(raw, dict) or not raw.get("node_id"):
            raise MalformedDocument(f"trace {trace_id}: malformed step record")
        meta = {k: v for k, v in raw.items() if k not in ("node_id", "input_text", "output_text")}
        records.append(
            (raw["node_id"], str(raw.get("input_text", "")), str(raw.get("output_text", "")), meta)
        )
    gt_value = document.get(ground_truth_key, (document.get("metadata") or {}).get(ground_truth_key))
    ground_truth = parse_ground_truth(gt_value) if gt_value is not None else None
    return convert_generic(
        records,
        trace_id=trace_id,
        task_text=task_text,
        ground_truth=ground_truth,
        extra=dict(document.get("extra") or {}),
    )


# Registered adapters: name -> fn(document, ground_truth_key=...) -> Trace
ADAPTERS: dict[str, Callable[..., Trace]] = {
    "langfuse": parse_langfuse_export,
    "generic": _parse_generic_document,
}


def validate_trace(trace: Trace) -> ValidationReport:
    """Check every Trace/TraceStep invariant; violations come back as data."""
    errors: list[ValidationIssue] = []
    warnings: list[ValidationIssue] = []

    if not trace.trace_id:
        errors.append(ValidationIssue("EMPTY_TRACE_ID", "trace_id is empty"))
    if not trace.steps:
        errors.append(ValidationIssue("EMPTY_STEPS", "trace has no steps"))
    if not trace.task_text.strip():
        warnings.append(ValidationIssue("EMPTY_TASK", "task_text is empty"))
    if trace.ground_truth is not None and not 0.0 <= trace.ground_truth <= 1.0:
        errors.append(
            ValidationIssue("GROUND_TRUTH_RANGE", f"ground_truth {trace.ground_truth} outside [0, 1]")
        )

    for expected, step in enumerate(trace.steps):
        if step.step_index != expected:
            errors.append(
                ValidationIssue(
                    "NON_CONSECUTIVE_STEPS",
                    f"expected step_index {expected}, found {step.step_index}",
                    step_index=step.step_index,
                )
            )
        if not step.node_id.strip():
            errors.append(ValidationIssue("EMPTY_NODE_ID", "node_id is empty", step_index=step.step_index))
        if step.started_at is not None and step.ended_at is not None and step.ended_at < step.started_at:
            errors.append(
                ValidationIssue("NEGATIVE_DURATION", "ended_at precedes started_at", step_index=step.step_index)
            )
        if not step.output_text:
            # truncated generations are common and still judgeable
            warnings.append(ValidationIssue("EMPTY_OUTPUT", "output_text is empty", step_index=step.step_index))

    return ValidationReport(trace_id=trace.trace_id, errors=tuple(errors), warnings=tuple(warnings))


@dataclass(frozen=True)
class LoadFailure:
    path: str
    code: str
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {"path": self.path, "code": self.code, "message": self.message}


@dataclass(frozen=True)
class LoadSummary:
    total_documents: int
    loaded: int
    failures: tuple[LoadFailure, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_documents": self.total_documents,
            "loaded": self.loaded,
            "failures": [f.to_dict() for f in self.failures],
        }


@dataclass(frozen=True)
class CorpusLoadResult:
    corpus: TraceCorpus
    summary: LoadSummary
    reports: dict[str, ValidationReport] = field(default_factory=dict)


def _iter_documents(path: Path) -> list[tuple[str, bytes]]:
    """Yield (name, raw bytes) for every candidate trace document under path."""
    if path.is_dir():
        files = sorted(p for p in path.rglob("*.json") if p.is_file())
        return [(str(p.relative_to(path)), p.read_bytes()) for p in files]
    if path.suffix.lower() == ".zip":
        out = []
        with zipfile.ZipFile(path) as zf:
            for name in sorted(zf.namelist()):
                if name.endswith(".json") and not name.endswith("/"):
                    out.append((name, zf.read(name)))
        return out
    if path.is_file():
        return [(path.name, path.read_bytes())]
    raise EmptyCorpus(f"input path {path} does not exist")


def load_corpus(
    path: str | Path,
    adapter: str = "langfuse",
    *,
    ground_truth_key: str = DEFAULT_GROUND_TRUTH_KEY,
    corpus_id: Optional[str] = None,
) -> CorpusLoadResult:
    """Load every parseable, valid trace under path.

    Per-file failures never abort the load; they are recorded in the
    summary. Traces whose validation report carries errors are excluded,
    so every trace in the returned corpus is known-good.
    """
    if adapter not in ADAPTERS:
        raise UnknownAdapter(f"unknown adapter {adapter!r}; registered: {sorted(ADAPTERS)}")
    parse = ADAPTERS[adapter]
    path = Path(path)
    documents = _iter_documents(path)

    traces: list[Trace] = []
    failures: list[LoadFailure] = []
    reports: dict[str, ValidationReport] = {}
    seen_ids: set[str] = set()
    for name, raw in documents:
        try:
            document = json.loads(raw)
        except json.JSONDecodeError as exc:
            failures.append(LoadFailure(name, "MalformedDocument", f"invalid JSON: {exc}"))
            continue
        try:
            trace = parse(document, ground_truth_key=ground_truth_key)
        except TraceParseError as exc:
            failures.append(LoadFailure(name, type(exc).__name__, str(exc)))
            continue
        if trace.trace_id in seen_ids:
            failures.append(LoadFailure(name, "DuplicateTraceId", f"duplicate trace_id {trace.trace_id}"))
            continue
        report = validate_trace(trace)
        reports[trace.trace_id] = report
        if not report.ok:
            codes = ",".join(e.code for e in report.errors)
            failures.append(LoadFailure(name, "ValidationFailed", f"trace {trace.trace_id}: {codes}"))
            continue
        seen_ids.add(trace.trace_id)
        traces.append(trace)

    if not traces:
        raise EmptyCorpus(f"no valid traces under {path} ({len(failures)} failures)")

    traces.sort(key=lambda t: t.trace_id)  # deterministic merge point
    corpus = TraceCorpus(corpus_id=corpus_id or path.stem or "corpus", traces=tuple(traces))
    summary = LoadSummary(total_documents=len(documents), loaded=len(traces), failures=tuple(failures))
    if failures:
        logger.warning("loaded %d/%d documents; %d failed", len(traces), len(documents), len(failures))
    else:
        logger.info("loaded %d traces from %s", len(traces), path)
    return CorpusLoadResult(corpus=corpus, summary=summary, reports=reports)


def group_steps_by_node(corpus: TraceCorpus) -> dict[str, list[tuple[str, int]]]:
    """Partition every step into exactly one per-node group."""
    groups: dict[str, list[tuple[str, int]]] = {}
    for trace in corpus.traces:
        for step in trace.steps:
            groups.setdefault(step.node_id, []).append((trace.trace_id, step.step_index))
    return groups
