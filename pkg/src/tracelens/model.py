"""Intermediate representation for agent execution traces.

Every source format is converted into these types before evaluation. All
types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Optional


def _parse_ts(value: Any) -> Optional[datetime]:
    """Parse an ISO-8601 timestamp (Z suffix tolerated) to UTC, ms precision."""
    if value is None or value == "":
        return None
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, (int, float)):
        dt = datetime.fromtimestamp(value / 1000.0, tz=timezone.utc)
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
    else:
        raise ValueError(f"unsupported timestamp value: {value!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    # millisecond precision keeps serialization stable across round-trips
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def _format_ts(dt: Optional[datetime]) -> Optional[str]:
    if dt is None:
        return None
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


@dataclass(frozen=True)
class TraceStep:
    """One LLM call: the rendered input, the completion, and the emitting node."""

    step_index: int
    node_id: str
    input_text: str
    output_text: str
    started_at: Optional[datetime] = None
    ended_at: Optional[datetime] = None
    model_name: Optional[str] = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "step_index": self.step_index,
            "node_id": self.node_id,
            "input_text": self.input_text,
            "output_text": self.output_text,
            "started_at": _format_ts(self.started_at),
            "ended_at": _format_ts(self.ended_at),
            "model_name": self.model_name,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TraceStep":
        return cls(
            step_index=int(d["step_index"]),
            node_id=d["node_id"],
            input_text=d.get("input_text", ""),
            output_text=d.get("output_text", ""),
            started_at=_parse_ts(d.get("started_at")),
            ended_at=_parse_ts(d.get("ended_at")),
            model_name=d.get("model_name"),
            extra=dict(d.get("extra") or {}),
        )


@dataclass(frozen=True)
class Trace:
    """The recorded execution of one task: an ordered sequence of steps."""

    trace_id: str
    task_text: str
    steps: tuple[TraceStep, ...]
    ground_truth: Optional[float] = None  # unit interval; labels map to 1.0 / 0.0
    source: str = "generic"
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "task_text": self.task_text,
            "steps": [s.to_dict() for s in self.steps],
            "ground_truth": self.ground_truth,
            "source": self.source,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Trace":
        gt = d.get("ground_truth")
        return cls(
            trace_id=d["trace_id"],
            task_text=d.get("task_text", ""),
            steps=tuple(TraceStep.from_dict(s) for s in d.get("steps", [])),
            ground_truth=None if gt is None else float(gt),
            source=d.get("source", "generic"),
            extra=dict(d.get("extra") or {}),
        )


@dataclass(frozen=True)
class TraceCorpus:
    corpus_id: str
    traces: tuple[Trace, ...]

    @property
    def node_catalog(self) -> tuple[str, ...]:
        """Exact union of node_id over all steps, sorted for determinism."""
        seen: set[str] = set()
        for trace in self.traces:
            for step in trace.steps:
                seen.add(step.node_id)
        return tuple(sorted(seen))

    @property
    def has_ground_truth(self) -> bool:
        """True iff every trace carries a label."""
        return bool(self.traces) and all(t.ground_truth is not None for t in self.traces)

    @property
    def n_traces(self) -> int:
        return len(self.traces)

    def get_trace(self, trace_id: str) -> Optional[Trace]:
        for trace in self.traces:
            if trace.trace_id == trace_id:
                return trace
        return None

    def summary(self) -> dict[str, Any]:
        return {
            "corpus_id": self.corpus_id,
            "n_traces": self.n_traces,
            "n_steps": sum(t.n_steps for t in self.traces),
            "node_catalog": list(self.node_catalog),
            "has_ground_truth": self.has_ground_truth,
        }


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    step_index: Optional[int] = None

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "step_index": self.step_index}


@dataclass(frozen=True)
class ValidationReport:
    """Per-trace invariant check result; errors exclude, warnings never do."""

    trace_id: str
    errors: tuple[ValidationIssue, ...] = ()
    warnings: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "errors": [e.to_dict() for e in self.errors],
            "warnings": [w.to_dict() for w in self.warnings],
        }
