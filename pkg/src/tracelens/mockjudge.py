"""Deterministic rulebook judge for offline, reproducible runs.

Keyword triggers in step outputs map to fixed scores and critique
sentences; rubric generation comes from a canned task book with a generic
fallback; rubric verification checks criterion text verbatim against step
outputs. Responses use the same labeled format as a real judge, so the
full parsing path is exercised.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

# (marker in output_text, raw score 1..10, critique statement); first match
# decides nothing alone; all matching statements join, lowest score wins.
STEP_RULES: tuple[tuple[str, int, str], ...] = (
    ("ERROR", 1, "tool call returned an error"),
    ("LOOP", 2, "repeated the same call redundantly"),
    ("FORMAT", 3, "final answer format is malformed"),
)
CLEAN_STEP_SCORE = 9
CLEAN_STEP_TEXT = "step looks correct and complete."

TRACE_COMPLETE_MARKER = "TASK COMPLETE"
TRACE_COMPLETE_SCORE = 10
TRACE_COMPLETE_TEXT = "the task was completed and the final deliverable is present."
TRACE_ERROR_SCORE = 3
TRACE_ERROR_TEXT = "execution hit tool errors; the final deliverable is missing"
TRACE_INCOMPLETE_SCORE = 5
TRACE_INCOMPLETE_TEXT = "the final deliverable is missing"

FALLBACK_RUBRICS = (
    "the requested deliverable is produced",
    "no step reports an unrecoverable error",
)

DEFAULT_RUBRIC_BOOK: dict[str, tuple[str, ...]] = {
    "T1": (
        "the email from alice is located",
        "a reply is sent to alice",
        "the reply references the original request",
    ),
}

_STEP_HEADER_RE = re.compile(r"(?m)^--- step \d+ \(node: [^)]*\) ---\n")


def _output_sections(rendered_trace: str) -> list[str]:
    """Recover per-step output texts from the engine's trace rendering."""
    sections = []
    for block in _STEP_HEADER_RE.split(rendered_trace)[1:]:
        idx = block.find("output:\n")
        text = block[idx + len("output:\n"):] if idx >= 0 else block
        sections.append(text.strip())
    return sections if sections else [rendered_trace]


def _dimension_lines(dimensions: Sequence[str], raw_score: int) -> str:
    return "\n".join(f"{dim}: {raw_score}" for dim in dimensions)


@dataclass
class MockJudge:
    """Rulebook implementation of the judge backend interface."""

    model_name: str = "mock-judge"
    rubric_book: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_RUBRIC_BOOK)
    )

    def step_call(self, *, task: str, input_text: str, output_text: str, context: str,
                  dimensions: Sequence[str]) -> str:
        statements = [text for marker, _, text in STEP_RULES if marker in output_text]
        scores = [score for marker, score, _ in STEP_RULES if marker in output_text]
        if statements:
            justification = "; ".join(statements)
            raw_score = min(scores)
        else:
            justification = CLEAN_STEP_TEXT
            raw_score = CLEAN_STEP_SCORE
        return (
            f"Justification: {justification}\n"
            f"{_dimension_lines(dimensions, raw_score)}\n"
            f"Score: {raw_score}"
        )

    def trace_call(self, *, task: str, rendered_trace: str, dimensions: Sequence[str]) -> str:
        outputs = _output_sections(rendered_trace)
        if TRACE_COMPLETE_MARKER in outputs[-1]:
            justification, raw_score = TRACE_COMPLETE_TEXT, TRACE_COMPLETE_SCORE
        elif any("ERROR" in out for out in outputs):
            justification, raw_score = TRACE_ERROR_TEXT, TRACE_ERROR_SCORE
        else:
            justification, raw_score = TRACE_INCOMPLETE_TEXT, TRACE_INCOMPLETE_SCORE
        return (
            f"Justification: {justification}\n"
            f"{_dimension_lines(dimensions, raw_score)}\n"
            f"Score: {raw_score}"
        )

    def rubric_gen_call(self, *, task: str) -> str:
        criteria = self.rubric_book.get(task.strip(), FALLBACK_RUBRICS)
        return "\n".join(f"{i + 1}. {text}" for i, text in enumerate(criteria))

    def rubric_verify_call(self, *, task: str, rendered_trace: str,
                           rubrics: Sequence[tuple[str, str]]) -> str:
        outputs = _output_sections(rendered_trace)
        blocks = []
        for rubric_id, criterion in rubrics:
            if any(criterion in out for out in outputs):
                blocks.append(
                    f"Rubric {rubric_id}: FULFILLED\n"
                    f"Reasoning: criterion text found verbatim in a step output."
                )
            else:
                blocks.append(
                    f"Rubric {rubric_id}: NOT FULFILLED\n"
                    f"Reasoning: unfulfilled criterion: {criterion}"
                )
        return "\n".join(blocks)
