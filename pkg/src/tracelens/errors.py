"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class TraceLensError(Exception):
    """Base class for every error raised by this package."""


# --- ingest -----------------------------------------------------------------

class TraceParseError(TraceLensError):
    """A single trace document could not be turned into the IR."""


class MalformedDocument(TraceParseError):
    pass


class NoLlmCalls(TraceParseError):
    """The document contains zero LLM-call observations."""


class MissingTask(TraceParseError):
    """No task text recoverable at the trace root."""


class EmptyRecords(TraceParseError):
    pass


class UnknownAdapter(TraceLensError):
    pass


class EmptyCorpus(TraceLensError):
    """Zero valid traces after loading a directory or archive."""


# --- judge ------------------------------------------------------------------

class JudgeError(TraceLensError):
    pass


class TransportError(JudgeError):
    """LLM endpoint unreachable or persistently failing after retries."""


class AuthError(TransportError):
    pass


class ContextOverflow(JudgeError):
    """Prompt exceeds the model's context limit."""


class UnparseableVerdict(JudgeError):
    """No labeled score/verdict line in a judge completion."""


class ScoreOutOfRange(JudgeError):
    """Judge emitted an integer outside 1..10."""


class EmptyRubrics(JudgeError):
    pass


class PipelineError(TraceLensError):
    """Every trace failed, or a whole pipeline stage failed fatally."""


# --- insights ---------------------------------------------------------------

class DegenerateClustering(TraceLensError):
    """Consolidation collapsed clearly distinct candidates into one cluster."""


# --- analytics --------------------------------------------------------------

class MissingMode(TraceLensError):
    """A score-prediction method needs a judge mode that was disabled."""


class DegenerateLabels(TraceLensError):
    """AUC needs at least one positive and one negative label."""


class LengthMismatch(TraceLensError):
    pass


class NoGroundTruth(TraceLensError):
    pass


# --- bundle / config / server -------------------------------------------------

class ConfigParseError(TraceLensError):
    pass


class ConfigInvalidError(TraceLensError):
    """Config parsed but failed validation; message carries field paths."""


class CorruptBundle(TraceLensError):
    pass


class VersionMismatch(TraceLensError):
    pass


class BundleReferenceError(TraceLensError):
    """A cross-reference (trace_id, step_index, insight_id, node_id) does not resolve."""


class BindError(TraceLensError):
    pass
