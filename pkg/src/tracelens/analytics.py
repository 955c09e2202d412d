"""Quantitative layer: success prediction, judge reliability, topology, node stats."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .errors import DegenerateLabels, LengthMismatch, MissingMode, NoGroundTruth
from .insights import InsightSet
from .judging import TraceEvaluationRecord
from .model import TraceCorpus

PREDICTION_METHODS = ("trace", "rubric", "stepwise")
HISTOGRAM_BINS = 10


@dataclass(frozen=True)
class ScorePrediction:
    trace_id: str
    method: str
    score: float

    def to_dict(self) -> dict[str, Any]:
        return {"trace_id": self.trace_id, "method": self.method, "score": self.score}


def predict_trace_score(record: TraceEvaluationRecord, method: str) -> ScorePrediction:
    """trace: the holistic critique score; rubric: fraction of rubrics fulfilled;
    stepwise: arithmetic mean of step scores."""
    if method == "trace":
        if record.trace_critique is None:
            raise MissingMode(f"trace {record.trace_id}: trace mode was disabled")
        score = record.trace_critique.score
    elif method == "rubric":
        if record.rubric_verdicts is None:
            raise MissingMode(f"trace {record.trace_id}: rubric mode was disabled")
        score = record.rubric_verdicts.fraction_fulfilled
    elif method == "stepwise":
        if not record.step_critiques:
            raise MissingMode(f"trace {record.trace_id}: step mode was disabled")
        # exact-rational mean: a trace whose steps all score s predicts s exactly
        score = statistics.mean(c.score for c in record.step_critiques)
    else:
        raise ValueError(f"unknown prediction method {method!r}")
    return ScorePrediction(trace_id=record.trace_id, method=method, score=score)


def compute_auc(predictions: Sequence[float], labels: Sequence[int]) -> float:
    """Mann–Whitney AUC: fraction of (positive, negative) pairs where the
    positive outscores the negative, ties counting 0.5."""
    if len(predictions) != len(labels):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(labels)} labels")
    y = np.asarray(labels, dtype=float)
    if not ((y == 0) | (y == 1)).all():
        raise ValueError("labels must be 0 or 1")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(f"need both classes, got {n_pos} positive / {n_neg} negative")

    scores = np.asarray(predictions, dtype=float)
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores), dtype=float)
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # tied values share the average of their 1-based rank range
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    rank_sum_pos = float(ranks[y == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


@dataclass(frozen=True)
class ReliabilityReport:
    auc: dict[str, float]
    n_traces: int
    n_positive: int
    notes: tuple[str, ...] = ()
    node_score_split: dict[str, dict[str, Optional[float]]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "auc": self.auc,
            "n_traces": self.n_traces,
            "n_positive": self.n_positive,
            "notes": list(self.notes),
            "node_score_split": self.node_score_split,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ReliabilityReport":
        return cls(
            auc={k: float(v) for k, v in (d.get("auc") or {}).items()},
            n_traces=int(d["n_traces"]),
            n_positive=int(d["n_positive"]),
            notes=tuple(d.get("notes", [])),
            node_score_split=d.get("node_score_split", {}),
        )


def _node_score_split(
    records: Sequence[TraceEvaluationRecord], labels: dict[str, int]
) -> dict[str, dict[str, Optional[float]]]:
    """Per-node mean step score under each label: which components behave
    differently on successful vs failed traces."""
    sums: dict[str, dict[int, list[float]]] = {}
    for record in records:
        label = labels.get(record.trace_id)
        if label is None:
            continue
        for critique in record.step_critiques:
            sums.setdefault(critique.node_id, {0: [], 1: []})[label].append(critique.score)
    split: dict[str, dict[str, Optional[float]]] = {}
    for node, by_label in sorted(sums.items()):
        split[node] = {
            "success_mean": statistics.mean(by_label[1]) if by_label[1] else None,
            "failure_mean": statistics.mean(by_label[0]) if by_label[0] else None,
        }
    return split


def judge_reliability_report(
    records: Sequence[TraceEvaluationRecord],
    corpus: TraceCorpus,
    *,
    threshold: float = 0.5,
) -> ReliabilityReport:
    """AUC of each prediction method against ground-truth labels.

    A method appears only when every labeled trace has that prediction;
    single-class label sets leave AUC empty with an explanatory note.
    """
    if not corpus.has_ground_truth:
        raise NoGroundTruth(f"corpus {corpus.corpus_id} lacks ground-truth labels")
    by_id = {record.trace_id: record for record in records}
    labeled = [t for t in corpus.traces if t.trace_id in by_id]
    labels = {t.trace_id: int(t.ground_truth >= threshold) for t in labeled}

    notes: list[str] = []
    label_values = [labels[t.trace_id] for t in labeled]
    n_positive = sum(label_values)
    auc: dict[str, float] = {}
    if n_positive == 0 or n_positive == len(label_values):
        notes.append("degenerate labels: only one class present, AUC omitted")
    else:
        for method in PREDICTION_METHODS:
            try:
                predictions = [
                    predict_trace_score(by_id[t.trace_id], method).score for t in labeled
                ]
            except MissingMode:
                notes.append(f"method {method}: predictions incomplete, AUC omitted")
                continue
            auc[method] = compute_auc(predictions, label_values)

    return ReliabilityReport(
        auc=auc,
        n_traces=len(labeled),
        n_positive=n_positive,
        notes=tuple(notes),
        node_score_split=_node_score_split(records, labels),
    )


@dataclass(frozen=True)
class TopologyGraph:
    nodes: tuple[dict[str, Any], ...]  # {node_id, step_count}
    edges: tuple[dict[str, Any], ...]  # {from, to, transition_count}
    entry_counts: dict[str, int]
    exit_counts: dict[str, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": list(self.nodes),
            "edges": list(self.edges),
            "entry_counts": self.entry_counts,
            "exit_counts": self.exit_counts,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TopologyGraph":
        return cls(
            nodes=tuple(d.get("nodes", [])),
            edges=tuple(d.get("edges", [])),
            entry_counts=d.get("entry_counts", {}),
            exit_counts=d.get("exit_counts", {}),
        )


def build_topology(corpus: TraceCorpus) -> TopologyGraph:
    """Directed node graph from within-trace step adjacency."""
    step_counts: dict[str, int] = {}
    transitions: dict[tuple[str, str], int] = {}
    entries: dict[str, int] = {}
    exits: dict[str, int] = {}
    for trace in corpus.traces:
        sequence = [step.node_id for step in trace.steps]
        entries[sequence[0]] = entries.get(sequence[0], 0) + 1
        exits[sequence[-1]] = exits.get(sequence[-1], 0) + 1
        for node in sequence:
            step_counts[node] = step_counts.get(node, 0) + 1
        for src, dst in zip(sequence, sequence[1:]):
            transitions[(src, dst)] = transitions.get((src, dst), 0) + 1
    return TopologyGraph(
        nodes=tuple(
            {"node_id": node, "step_count": step_counts[node]} for node in sorted(step_counts)
        ),
        edges=tuple(
            {"from": src, "to": dst, "transition_count": count}
            for (src, dst), count in sorted(transitions.items())
        ),
        entry_counts=dict(sorted(entries.items())),
        exit_counts=dict(sorted(exits.items())),
    )


def score_histogram(scores: Sequence[float]) -> list[int]:
    """10 uniform bins over [0, 1], last bin right-closed (1.0 lands in bin 9)."""
    bins = [0] * HISTOGRAM_BINS
    for score in scores:
        bins[min(int(score * HISTOGRAM_BINS), HISTOGRAM_BINS - 1)] += 1
    return bins


@dataclass(frozen=True)
class NodeStats:
    node_id: str
    step_count: int
    scored_steps: int
    mean_score: Optional[float]
    min_score: Optional[float]
    max_score: Optional[float]
    histogram: tuple[int, ...]
    issue_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "step_count": self.step_count,
            "scored_steps": self.scored_steps,
            "mean_score": self.mean_score,
            "min_score": self.min_score,
            "max_score": self.max_score,
            "histogram": list(self.histogram),
            "issue_counts": self.issue_counts,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "NodeStats":
        return cls(
            node_id=d["node_id"],
            step_count=int(d["step_count"]),
            scored_steps=int(d.get("scored_steps", 0)),
            mean_score=d.get("mean_score"),
            min_score=d.get("min_score"),
            max_score=d.get("max_score"),
            histogram=tuple(d.get("histogram", [0] * HISTOGRAM_BINS)),
            issue_counts=d.get("issue_counts", {}),
        )


def node_usage_stats(
    corpus: TraceCorpus,
    records: Sequence[TraceEvaluationRecord],
    node_insights: Optional[dict[str, InsightSet]] = None,
) -> dict[str, NodeStats]:
    step_counts: dict[str, int] = {node: 0 for node in corpus.node_catalog}
    for trace in corpus.traces:
        for step in trace.steps:
            step_counts[step.node_id] += 1

    scores_by_node: dict[str, list[float]] = {node: [] for node in step_counts}
    for record in records:
        for critique in record.step_critiques:
            scores_by_node.setdefault(critique.node_id, []).append(critique.score)

    stats: dict[str, NodeStats] = {}
    for node in sorted(step_counts):
        scores = scores_by_node.get(node, [])
        issue_counts: dict[str, int] = {}
        if node_insights and node in node_insights:
            for insight in node_insights[node].insights:
                issue_counts[insight.insight_id] = insight.frequency
        stats[node] = NodeStats(
            node_id=node,
            step_count=step_counts[node],
            scored_steps=len(scores),
            mean_score=statistics.mean(scores) if scores else None,
            min_score=min(scores) if scores else None,
            max_score=max(scores) if scores else None,
            histogram=tuple(score_histogram(scores)),
            issue_counts=issue_counts,
        )
    return stats
