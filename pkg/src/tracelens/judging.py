"""Judge orchestration: four critique modes over a corpus.

The judge backend is pluggable (HTTP transport or the deterministic mock);
every backend returns raw completion text in the mandated format (a
justification followed by a labeled score/verdict line) and all parsing
happens here, so both paths exercise identical code.
"""

from __future__ import annotations

import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Optional, Protocol, Sequence

from .errors import ContextOverflow, EmptyRubrics, JudgeError, PipelineError, ScoreOutOfRange, UnparseableVerdict
from .model import Trace, TraceCorpus, TraceStep
from .prompts import load_templates

logger = logging.getLogger(__name__)

DEFAULT_STEP_DIMENSIONS = ("correctness", "completeness", "clarity")
DEFAULT_TRACE_DIMENSIONS = ("execution quality", "final deliverable")
MAX_RUBRICS = 12


def normalize_score(raw: int) -> float:
    """Map a raw 1..10 judge integer onto [0, 1]: (s - 1) / 9 exactly."""
    return (raw - 1) / 9


@dataclass(frozen=True)
class JudgeConfig:
    model_name: str
    endpoint: str = ""
    backend: str = "http"  # http | mock
    mode_prompts: dict[str, str] = field(default_factory=load_templates)
    step_dimensions: tuple[str, ...] = DEFAULT_STEP_DIMENSIONS
    trace_dimensions: tuple[str, ...] = DEFAULT_TRACE_DIMENSIONS
    max_parallel: int = 4
    max_retries: int = 3
    temperature: float = 0.0
    cache_dir: Optional[str] = None
    max_prompt_chars: int = 48_000
    timeout_seconds: float = 120.0

    def __post_init__(self) -> None:
        missing = {"step", "trace", "rubric_gen", "rubric_verify"} - set(self.mode_prompts)
        if missing:
            raise ValueError(f"mode_prompts missing templates: {sorted(missing)}")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        if not self.step_dimensions or not self.trace_dimensions:
            raise ValueError("dimension lists must be non-empty")


@dataclass(frozen=True)
class ModeFlags:
    step: bool = True
    trace: bool = True
    rubric: bool = True

    def __post_init__(self) -> None:
        if not (self.step or self.trace or self.rubric):
            raise ValueError("at least one judge mode must be enabled")


class JudgeBackend(Protocol):
    """One method per judge mode; each returns raw completion text."""

    def step_call(self, *, task: str, input_text: str, output_text: str, context: str,
                  dimensions: Sequence[str]) -> str: ...

    def trace_call(self, *, task: str, rendered_trace: str, dimensions: Sequence[str]) -> str: ...

    def rubric_gen_call(self, *, task: str) -> str: ...

    def rubric_verify_call(self, *, task: str, rendered_trace: str,
                           rubrics: Sequence[tuple[str, str]]) -> str: ...


# --- verdict parsing ----------------------------------------------------------

_SCORE_RE = re.compile(r"(?im)^[ \t*#>]*(?:final\s+)?score\s*[:=]\s*(-?\d+)\s*\**\s*$")
_VERDICT_RE = re.compile(
    r"(?im)^[ \t*#>]*verdict\s*[:=]\s*(fulfilled|not\s+fulfilled|yes|no|true|false)\s*\.?\s*\**\s*$"
)
_JUSTIFICATION_LABEL = re.compile(r"(?is)^\s*justification\s*[:=]\s*")

_TRUE_VERDICTS = {"fulfilled", "yes", "true"}


def parse_judge_response(raw: str) -> tuple[str, int | bool]:
    """Extract (justification, final score or verdict) from a judge completion.

    The LAST labeled line wins: chain-of-thought may mention intermediate
    numbers, the final labeled line is the answer.
    """
    score_matches = list(_SCORE_RE.finditer(raw))
    verdict_matches = list(_VERDICT_RE.finditer(raw))
    last_score = score_matches[-1] if score_matches else None
    last_verdict = verdict_matches[-1] if verdict_matches else None

    if last_score is None and last_verdict is None:
        raise UnparseableVerdict(f"no labeled score or verdict line in response: {raw[:200]!r}")

    if last_verdict is not None and (last_score is None or last_verdict.start() > last_score.start()):
        winner, value = last_verdict, None
        verdict_text = re.sub(r"\s+", " ", last_verdict.group(1).lower())
        value = verdict_text in _TRUE_VERDICTS
    else:
        winner = last_score
        value = int(last_score.group(1))
        if not 1 <= value <= 10:
            raise ScoreOutOfRange(f"score {value} outside 1..10")

    justification = _JUSTIFICATION_LABEL.sub("", raw[: winner.start()]).strip()
    return justification, value


def parse_dimension_scores(raw: str, dimensions: Sequence[str]) -> dict[str, int]:
    """Pull per-dimension integer lines out of a completion; absent dimensions are skipped."""
    found: dict[str, int] = {}
    for dim in dimensions:
        pattern = re.compile(rf"(?im)^[ \t*#>-]*{re.escape(dim)}\s*[:=]\s*(\d+)\s*\**\s*$")
        matches = list(pattern.finditer(raw))
        if matches:
            value = int(matches[-1].group(1))
            if 1 <= value <= 10:
                found[dim] = value
    return found


def _strip_dimension_lines(text: str, dimensions: Sequence[str]) -> str:
    """Drop labeled dimension-score lines so the justification is prose only."""
    patterns = [
        re.compile(rf"(?i)^[ \t*#>-]*{re.escape(dim)}\s*[:=]\s*\d+\s*\**\s*$") for dim in dimensions
    ]
    kept = [
        line for line in text.splitlines() if not any(p.fullmatch(line) for p in patterns)
    ]
    return "\n".join(kept).strip()


# --- critique records ---------------------------------------------------------

@dataclass(frozen=True)
class StepCritique:
    trace_id: str
    step_index: int
    node_id: str
    justification: str
    score: float
    dimension_scores: dict[str, float] = field(default_factory=dict)
    raw_response: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "step_index": self.step_index,
            "node_id": self.node_id,
            "justification": self.justification,
            "score": self.score,
            "dimension_scores": self.dimension_scores,
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StepCritique":
        return cls(
            trace_id=d["trace_id"],
            step_index=int(d["step_index"]),
            node_id=d["node_id"],
            justification=d["justification"],
            score=float(d["score"]),
            dimension_scores={k: float(v) for k, v in (d.get("dimension_scores") or {}).items()},
            raw_response=d.get("raw_response", ""),
        )


@dataclass(frozen=True)
class TraceCritique:
    trace_id: str
    justification: str
    score: float
    dimension_scores: dict[str, float] = field(default_factory=dict)
    raw_response: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "justification": self.justification,
            "score": self.score,
            "dimension_scores": self.dimension_scores,
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TraceCritique":
        return cls(
            trace_id=d["trace_id"],
            justification=d["justification"],
            score=float(d["score"]),
            dimension_scores={k: float(v) for k, v in (d.get("dimension_scores") or {}).items()},
            raw_response=d.get("raw_response", ""),
        )


@dataclass(frozen=True)
class Rubric:
    rubric_id: str
    criterion_text: str


@dataclass(frozen=True)
class RubricSet:
    trace_id: str
    rubrics: tuple[Rubric, ...]
    generated_by: str = ""

    def __post_init__(self) -> None:
        ids = [r.rubric_id for r in self.rubrics]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate rubric_ids for trace {self.trace_id}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "rubrics": [{"rubric_id": r.rubric_id, "criterion_text": r.criterion_text} for r in self.rubrics],
            "generated_by": self.generated_by,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RubricSet":
        return cls(
            trace_id=d["trace_id"],
            rubrics=tuple(Rubric(r["rubric_id"], r["criterion_text"]) for r in d.get("rubrics", [])),
            generated_by=d.get("generated_by", ""),
        )


@dataclass(frozen=True)
class RubricVerdict:
    rubric_id: str
    fulfilled: bool
    reasoning: str


@dataclass(frozen=True)
class RubricVerdicts:
    trace_id: str
    verdicts: tuple[RubricVerdict, ...]

    @property
    def fraction_fulfilled(self) -> float:
        if not self.verdicts:
            return 0.0
        return sum(1 for v in self.verdicts if v.fulfilled) / len(self.verdicts)

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "verdicts": [
                {"rubric_id": v.rubric_id, "fulfilled": v.fulfilled, "reasoning": v.reasoning}
                for v in self.verdicts
            ],
            "fraction_fulfilled": self.fraction_fulfilled,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RubricVerdicts":
        return cls(
            trace_id=d["trace_id"],
            verdicts=tuple(
                RubricVerdict(v["rubric_id"], bool(v["fulfilled"]), v.get("reasoning", ""))
                for v in d.get("verdicts", [])
            ),
        )


@dataclass(frozen=True)
class EvaluationGap:
    """A judge call that failed; recorded instead of aborting siblings."""

    stage: str  # step | trace | rubric_gen | rubric_verify
    error: str
    step_index: Optional[int] = None

    def to_dict(self) -> dict[str, Any]:
        return {"stage": self.stage, "error": self.error, "step_index": self.step_index}


@dataclass(frozen=True)
class TraceEvaluationRecord:
    trace_id: str
    step_critiques: tuple[StepCritique, ...] = ()
    trace_critique: Optional[TraceCritique] = None
    rubric_set: Optional[RubricSet] = None
    rubric_verdicts: Optional[RubricVerdicts] = None
    judge_model: str = ""
    started_at: Optional[datetime] = None
    duration_seconds: float = 0.0
    gaps: tuple[EvaluationGap, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace_id": self.trace_id,
            "step_critiques": [c.to_dict() for c in self.step_critiques],
            "trace_critique": self.trace_critique.to_dict() if self.trace_critique else None,
            "rubric_set": self.rubric_set.to_dict() if self.rubric_set else None,
            "rubric_verdicts": self.rubric_verdicts.to_dict() if self.rubric_verdicts else None,
            "judge_model": self.judge_model,
            "started_at": self.started_at.isoformat() if self.started_at else None,
            "duration_seconds": self.duration_seconds,
            "gaps": [g.to_dict() for g in self.gaps],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TraceEvaluationRecord":
        started = d.get("started_at")
        return cls(
            trace_id=d["trace_id"],
            step_critiques=tuple(StepCritique.from_dict(c) for c in d.get("step_critiques", [])),
            trace_critique=TraceCritique.from_dict(d["trace_critique"]) if d.get("trace_critique") else None,
            rubric_set=RubricSet.from_dict(d["rubric_set"]) if d.get("rubric_set") else None,
            rubric_verdicts=RubricVerdicts.from_dict(d["rubric_verdicts"]) if d.get("rubric_verdicts") else None,
            judge_model=d.get("judge_model", ""),
            started_at=datetime.fromisoformat(started) if started else None,
            duration_seconds=float(d.get("duration_seconds", 0.0)),
            gaps=tuple(
                EvaluationGap(g["stage"], g["error"], g.get("step_index")) for g in d.get("gaps", [])
            ),
        )


# --- prompt assembly helpers ---------------------------------------------------

CONTEXT_OUTPUT_CHARS = 400
ELISION_MARKER = "[... {n} steps elided ...]"


def context_digest(steps: Sequence[TraceStep], index: int) -> str:
    """Bounded summary of the steps before ``index``: node path + last output."""
    if index == 0:
        return "(this is the first step)"
    path = " -> ".join(s.node_id for s in steps[:index])
    last = steps[index - 1].output_text
    if len(last) > CONTEXT_OUTPUT_CHARS:
        last = last[:CONTEXT_OUTPUT_CHARS] + " [...]"
    return f"steps so far (by node): {path}\nlast step output: {last}"


def _render_step_block(step: TraceStep) -> str:
    return (
        f"--- step {step.step_index} (node: {step.node_id}) ---\n"
        f"input:\n{step.input_text}\n"
        f"output:\n{step.output_text}"
    )


def _shrink(text: str, limit: int) -> str:
    if len(text) <= limit:
        return text
    head = limit // 2
    tail = limit - head
    return text[:head] + "\n[... content elided ...]\n" + text[-tail:]


def render_trace(trace: Trace, max_chars: int) -> str:
    """Render all steps; over budget, keep the first and last verbatim and elide the middle."""
    blocks = [_render_step_block(s) for s in trace.steps]
    full = "\n\n".join(blocks)
    if len(full) <= max_chars or len(blocks) == 1:
        return full if len(full) <= max_chars else _shrink(full, max_chars)
    marker = ELISION_MARKER.format(n=len(blocks) - 2) if len(blocks) > 2 else ELISION_MARKER.format(n=0)
    reduced = "\n\n".join([blocks[0], marker, blocks[-1]])
    if len(reduced) <= max_chars:
        return reduced
    # two oversized endpoint steps: elide inside their texts, keeping both present
    budget = max(max_chars // 2 - len(marker), 500)
    return "\n\n".join([_shrink(blocks[0], budget), marker, _shrink(blocks[-1], budget)])


# --- mode operations ------------------------------------------------------------

def evaluate_step(
    config: JudgeConfig,
    backend: JudgeBackend,
    task_text: str,
    step: TraceStep,
    context: str,
    *,
    trace_id: str,
) -> StepCritique:
    try:
        raw = backend.step_call(
            task=task_text,
            input_text=step.input_text,
            output_text=step.output_text,
            context=context,
            dimensions=config.step_dimensions,
        )
        justification, value = parse_judge_response(raw)
    except JudgeError as exc:
        raise type(exc)(f"trace {trace_id} step {step.step_index}: {exc}") from exc
    if not isinstance(value, int):
        raise UnparseableVerdict(
            f"trace {trace_id} step {step.step_index}: expected a score, got a verdict"
        )
    score = normalize_score(value)
    dims_raw = parse_dimension_scores(raw, config.step_dimensions)
    dimension_scores = {
        dim: normalize_score(dims_raw.get(dim, value)) for dim in config.step_dimensions
    }
    justification = _strip_dimension_lines(justification, config.step_dimensions)
    return StepCritique(
        trace_id=trace_id,
        step_index=step.step_index,
        node_id=step.node_id,
        justification=justification or "(no justification given)",
        score=score,
        dimension_scores=dimension_scores,
        raw_response=raw,
    )


def evaluate_trace(config: JudgeConfig, backend: JudgeBackend, trace: Trace) -> TraceCritique:
    budget = config.max_prompt_chars
    while True:
        rendered = render_trace(trace, budget)
        try:
            raw = backend.trace_call(
                task=trace.task_text, rendered_trace=rendered, dimensions=config.trace_dimensions
            )
            break
        except ContextOverflow:
            # model limit hit despite our char budget: tighten and re-render
            budget //= 2
            if budget < 1_000:
                raise
            logger.warning("trace %s: context overflow, re-rendering at %d chars", trace.trace_id, budget)
    justification, value = parse_judge_response(raw)
    if not isinstance(value, int):
        raise UnparseableVerdict(f"trace {trace.trace_id}: expected a score, got a verdict")
    dims_raw = parse_dimension_scores(raw, config.trace_dimensions)
    justification = _strip_dimension_lines(justification, config.trace_dimensions)
    return TraceCritique(
        trace_id=trace.trace_id,
        justification=justification or "(no justification given)",
        score=normalize_score(value),
        dimension_scores={
            dim: normalize_score(dims_raw.get(dim, value)) for dim in config.trace_dimensions
        },
        raw_response=raw,
    )


_RUBRIC_LINE_RE = re.compile(r"(?m)^\s*(\d+)[.)]\s*(.+?)\s*$")


def generate_rubrics(
    config: JudgeConfig, backend: JudgeBackend, task_text: str, *, trace_id: str
) -> RubricSet:
    """Task-only rubric generation; the judge picks the count, capped at 12."""
    if not task_text.strip():
        raise ValueError("task_text is empty")
    criteria: list[str] = []
    for attempt in range(2):
        raw = backend.rubric_gen_call(task=task_text)
        criteria = [m.group(2) for m in _RUBRIC_LINE_RE.finditer(raw) if m.group(2).strip()]
        if criteria:
            break
        logger.warning("trace %s: no parseable rubrics (attempt %d)", trace_id, attempt + 1)
    if not criteria:
        raise EmptyRubrics(f"trace {trace_id}: judge returned zero parseable criteria")
    criteria = criteria[:MAX_RUBRICS]
    return RubricSet(
        trace_id=trace_id,
        rubrics=tuple(Rubric(f"r{i + 1}", text) for i, text in enumerate(criteria)),
        generated_by=config.model_name,
    )


def _parse_verify_response(raw: str, rubric_ids: Sequence[str]) -> dict[str, RubricVerdict]:
    """Parse per-rubric blocks; unmatched rubric ids are simply absent."""
    verdicts: dict[str, RubricVerdict] = {}
    block_re = re.compile(
        r"(?im)^[ \t*#>]*rubric\s+(\S+?)\s*[:=]\s*(fulfilled|not\s+fulfilled|yes|no)\s*\.?\s*$"
    )
    matches = list(block_re.finditer(raw))
    for i, match in enumerate(matches):
        rubric_id = match.group(1).strip()
        if rubric_id not in rubric_ids:
            continue
        fulfilled = re.sub(r"\s+", " ", match.group(2).lower()) in _TRUE_VERDICTS
        block_end = matches[i + 1].start() if i + 1 < len(matches) else len(raw)
        block = raw[match.end():block_end]
        reason_match = re.search(r"(?is)reasoning\s*[:=]\s*(.+)", block)
        reasoning = (reason_match.group(1) if reason_match else block).strip()
        verdicts[rubric_id] = RubricVerdict(rubric_id, fulfilled, reasoning)
    return verdicts


def verify_rubrics(
    config: JudgeConfig, backend: JudgeBackend, trace: Trace, rubrics: RubricSet
) -> RubricVerdicts:
    """One batched verification call; unparsed rubrics fall back to single calls."""
    pairs = [(r.rubric_id, r.criterion_text) for r in rubrics.rubrics]
    rendered = render_trace(trace, config.max_prompt_chars)
    raw = backend.rubric_verify_call(task=trace.task_text, rendered_trace=rendered, rubrics=pairs)
    ids = [r.rubric_id for r in rubrics.rubrics]
    parsed = _parse_verify_response(raw, ids)

    verdicts: list[RubricVerdict] = []
    for rubric in rubrics.rubrics:
        verdict = parsed.get(rubric.rubric_id)
        if verdict is None:
            single_raw = backend.rubric_verify_call(
                task=trace.task_text,
                rendered_trace=rendered,
                rubrics=[(rubric.rubric_id, rubric.criterion_text)],
            )
            verdict = _parse_verify_response(single_raw, [rubric.rubric_id]).get(rubric.rubric_id)
        if verdict is None:
            logger.warning(
                "trace %s rubric %s: verdict unparseable, defaulting to not fulfilled",
                trace.trace_id,
                rubric.rubric_id,
            )
            verdict = RubricVerdict(rubric.rubric_id, False, "verdict unparseable")
        verdicts.append(verdict)
    return RubricVerdicts(trace_id=trace.trace_id, verdicts=tuple(verdicts))


# --- corpus orchestration --------------------------------------------------------

def evaluate_trace_record(
    config: JudgeConfig,
    backend: JudgeBackend,
    trace: Trace,
    modes: ModeFlags = ModeFlags(),
) -> TraceEvaluationRecord:
    started_at = datetime.now(timezone.utc)
    t0 = time.monotonic()
    step_critiques: list[StepCritique] = []
    gaps: list[EvaluationGap] = []

    if modes.step:
        for step in trace.steps:
            context = context_digest(trace.steps, step.step_index)
            try:
                step_critiques.append(
                    evaluate_step(config, backend, trace.task_text, step, context, trace_id=trace.trace_id)
                )
            except JudgeError as exc:
                # one step's failure never aborts its siblings
                gaps.append(EvaluationGap("step", str(exc), step_index=step.step_index))

    trace_critique = None
    if modes.trace:
        try:
            trace_critique = evaluate_trace(config, backend, trace)
        except JudgeError as exc:
            gaps.append(EvaluationGap("trace", str(exc)))

    rubric_set = None
    rubric_verdicts = None
    if modes.rubric:
        try:
            rubric_set = generate_rubrics(config, backend, trace.task_text, trace_id=trace.trace_id)
        except JudgeError as exc:
            gaps.append(EvaluationGap("rubric_gen", str(exc)))
        if rubric_set is not None:
            try:
                rubric_verdicts = verify_rubrics(config, backend, trace, rubric_set)
            except JudgeError as exc:
                gaps.append(EvaluationGap("rubric_verify", str(exc)))

    return TraceEvaluationRecord(
        trace_id=trace.trace_id,
        step_critiques=tuple(step_critiques),
        trace_critique=trace_critique,
        rubric_set=rubric_set,
        rubric_verdicts=rubric_verdicts,
        judge_model=config.model_name,
        started_at=started_at,
        duration_seconds=time.monotonic() - t0,
        gaps=tuple(gaps),
    )


@dataclass(frozen=True)
class CorpusEvaluationResult:
    records: tuple[TraceEvaluationRecord, ...]
    failures: tuple[tuple[str, str], ...] = ()  # (trace_id, error)


def evaluate_corpus(
    corpus: TraceCorpus,
    config: JudgeConfig,
    backend: JudgeBackend,
    modes: ModeFlags = ModeFlags(),
    progress: Optional[Any] = None,
) -> CorpusEvaluationResult:
    """Evaluate every trace, up to max_parallel concurrently.

    Output order equals corpus order regardless of completion order; a
    failing trace is recorded and skipped, and only a corpus where every
    trace failed raises.
    """

    def run_one(trace: Trace):
        try:
            return evaluate_trace_record(config, backend, trace, modes), None
        except Exception as exc:  # noqa: BLE001 - per-trace isolation boundary
            logger.exception("trace %s evaluation failed", trace.trace_id)
            return None, f"{type(exc).__name__}: {exc}"

    results: list[tuple[Optional[TraceEvaluationRecord], Optional[str]]] = []
    with ThreadPoolExecutor(max_workers=config.max_parallel) as pool:
        for i, (trace, outcome) in enumerate(zip(corpus.traces, pool.map(run_one, corpus.traces))):
            results.append(outcome)
            logger.info("evaluated trace %d/%d (%s)", i + 1, corpus.n_traces, trace.trace_id)
            if progress is not None:
                progress(i + 1, corpus.n_traces, trace.trace_id)

    records = tuple(record for record, _ in results if record is not None)
    failures = tuple(
        (trace.trace_id, error)
        for trace, (_, error) in zip(corpus.traces, results)
        if error is not None
    )
    if not records:
        raise PipelineError(f"every trace failed evaluation ({len(failures)} failures)")
    return CorpusEvaluationResult(records=records, failures=failures)
