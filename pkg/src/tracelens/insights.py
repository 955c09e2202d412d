"""Aggregation of instance-level critiques into recurring issues.

Three phases per feedback pool: extract atomic issue statements, cluster
equivalent ones, link every insight back to the pool items that exhibit
it. The backend is pluggable: an LLM-backed default and a deterministic
mock (exact-match clustering, substring assignment) sharing one interface.
"""

from __future__ import annotations

import hashlib
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional, Protocol, Sequence

from .errors import DegenerateClustering, JudgeError
from .judging import TraceEvaluationRecord
from .model import TraceCorpus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SourceRef:
    trace_id: str
    step_index: Optional[int] = None  # None refers to the whole trace

    def to_dict(self) -> dict[str, Any]:
        return {"trace_id": self.trace_id, "step_index": self.step_index}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SourceRef":
        return cls(d["trace_id"], d.get("step_index"))


@dataclass(frozen=True)
class PoolItem:
    source_ref: SourceRef
    critique_text: str
    score: float


@dataclass(frozen=True)
class FeedbackPool:
    scope: str  # "system" or "node:<node_id>"
    items: tuple[PoolItem, ...]

    @property
    def node_id(self) -> Optional[str]:
        return self.scope.split(":", 1)[1] if self.scope.startswith("node:") else None


@dataclass(frozen=True)
class Insight:
    insight_id: str
    title: str
    description: str
    frequency: int
    instance_refs: tuple[SourceRef, ...]
    scope: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "insight_id": self.insight_id,
            "title": self.title,
            "description": self.description,
            "frequency": self.frequency,
            "instance_refs": [r.to_dict() for r in self.instance_refs],
            "scope": self.scope,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Insight":
        return cls(
            insight_id=d["insight_id"],
            title=d["title"],
            description=d.get("description", ""),
            frequency=int(d["frequency"]),
            instance_refs=tuple(SourceRef.from_dict(r) for r in d.get("instance_refs", [])),
            scope=d["scope"],
        )


@dataclass(frozen=True)
class InsightSet:
    scope: str
    insights: tuple[Insight, ...] = ()
    coverage: float = 0.0
    note: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "scope": self.scope,
            "insights": [i.to_dict() for i in self.insights],
            "coverage": self.coverage,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "InsightSet":
        return cls(
            scope=d["scope"],
            insights=tuple(Insight.from_dict(i) for i in d.get("insights", [])),
            coverage=float(d.get("coverage", 0.0)),
            note=d.get("note"),
        )


@dataclass(frozen=True)
class AggregatorConfig:
    backend: str = "mock"  # mock | llm
    min_support: int = 2
    max_insights: int = 20
    praise_threshold: float = 0.7
    min_pool_size: int = 2
    batch_size: int = 8
    max_workers: int = 4


@dataclass(frozen=True)
class IssueCandidate:
    text: str
    item_index: int  # index into the originating pool's items


class AggregatorBackend(Protocol):
    """Text-level primitives behind the three aggregation phases."""

    def extract(self, texts: Sequence[str]) -> list[list[str]]: ...

    def cluster(self, candidates: Sequence[str]) -> list[tuple[str, str, list[int]]]: ...

    def match(self, item_texts: Sequence[str], titles: Sequence[str]) -> list[list[int]]: ...


# --- pooling ---------------------------------------------------------------------

def build_pools(
    records: Sequence[TraceEvaluationRecord], corpus: TraceCorpus
) -> tuple[FeedbackPool, dict[str, FeedbackPool]]:
    """Partition critiques: step critiques by node, trace critiques plus
    unfulfilled-rubric reasonings into the system pool."""
    if not records:
        raise ValueError("no evaluation records")

    node_items: dict[str, list[PoolItem]] = {node: [] for node in corpus.node_catalog}
    system_items: list[PoolItem] = []
    for record in records:
        for critique in record.step_critiques:
            node_items.setdefault(critique.node_id, []).append(
                PoolItem(
                    source_ref=SourceRef(critique.trace_id, critique.step_index),
                    critique_text=critique.justification,
                    score=critique.score,
                )
            )
        if record.trace_critique is not None:
            system_items.append(
                PoolItem(
                    source_ref=SourceRef(record.trace_id),
                    critique_text=record.trace_critique.justification,
                    score=record.trace_critique.score,
                )
            )
        if record.rubric_verdicts is not None:
            # fulfilled rubrics carry no failure signal and stay out
            for verdict in record.rubric_verdicts.verdicts:
                if not verdict.fulfilled:
                    system_items.append(
                        PoolItem(
                            source_ref=SourceRef(record.trace_id),
                            critique_text=verdict.reasoning,
                            score=0.0,
                        )
                    )

    system_pool = FeedbackPool(scope="system", items=tuple(system_items))
    node_pools = {
        node: FeedbackPool(scope=f"node:{node}", items=tuple(items))
        for node, items in sorted(node_items.items())
    }
    return system_pool, node_pools


# --- phases ----------------------------------------------------------------------

def extract_issue_statements(
    pool: FeedbackPool, config: AggregatorConfig, backend: AggregatorBackend
) -> list[IssueCandidate]:
    """Decompose each sub-threshold critique into atomic negative findings."""
    if not pool.items:
        raise ValueError(f"pool {pool.scope} is empty")
    indices = [i for i, item in enumerate(pool.items) if item.score < config.praise_threshold]
    if not indices:
        return []
    statements = backend.extract([pool.items[i].critique_text for i in indices])
    candidates: list[IssueCandidate] = []
    for pool_index, found in zip(indices, statements):
        for text in found:
            text = text.strip()
            if text:
                candidates.append(IssueCandidate(text=text, item_index=pool_index))
    return candidates


def _insight_id(scope: str, title: str) -> str:
    return "i-" + hashlib.sha1(f"{scope}|{title}".encode("utf-8")).hexdigest()[:10]


def _sorted_capped(insights: list[Insight], max_insights: int) -> tuple[Insight, ...]:
    insights.sort(key=lambda ins: (-ins.frequency, ins.title))
    return tuple(insights[:max_insights])


def cluster_issues(
    candidates: Sequence[IssueCandidate],
    config: AggregatorConfig,
    backend: AggregatorBackend,
    *,
    scope: str,
) -> InsightSet:
    """Merge equivalent candidates; drop clusters below min_support."""
    if not candidates:
        raise ValueError("no candidates to cluster")
    texts = [c.text for c in candidates]
    clusters = backend.cluster(texts)
    distinct = len({_normalize(t) for t in texts})
    if len(clusters) == 1 and distinct >= 3:
        raise DegenerateClustering(
            f"{scope}: {distinct} distinct candidates collapsed into a single cluster"
        )
    insights: list[Insight] = []
    for title, description, members in clusters:
        if len(members) < config.min_support:
            continue
        insights.append(
            Insight(
                insight_id=_insight_id(scope, title),
                title=title[:120],
                description=description,
                frequency=len(members),
                instance_refs=(),
                scope=scope,
            )
        )
    return InsightSet(scope=scope, insights=_sorted_capped(insights, config.max_insights))


def assign_instances(
    insights: InsightSet,
    pool: FeedbackPool,
    config: AggregatorConfig,
    backend: AggregatorBackend,
) -> InsightSet:
    """Link every matching pool item to each insight; recompute frequencies and coverage."""
    if not insights.insights:
        return InsightSet(scope=insights.scope, insights=(), coverage=0.0, note=insights.note)
    titles = [ins.title for ins in insights.insights]
    matches = backend.match([item.critique_text for item in pool.items], titles)

    refs_per_insight: list[list[SourceRef]] = [[] for _ in titles]
    assigned_items: list[set[int]] = [set() for _ in titles]
    for item_index, hit_list in enumerate(matches):
        for insight_index in hit_list:
            if 0 <= insight_index < len(titles) and item_index not in assigned_items[insight_index]:
                assigned_items[insight_index].add(item_index)
                refs_per_insight[insight_index].append(pool.items[item_index].source_ref)

    final: list[Insight] = []
    for insight, refs in zip(insights.insights, refs_per_insight):
        if len(refs) < config.min_support:
            continue  # support can drop when several candidates came from one item
        final.append(
            Insight(
                insight_id=insight.insight_id,
                title=insight.title,
                description=insight.description,
                frequency=len(refs),
                instance_refs=tuple(refs),
                scope=insight.scope,
            )
        )
    final_set = _sorted_capped(final, config.max_insights)
    surviving = {ins.insight_id for ins in final_set}
    covered: set[int] = set()
    for insight_index, items in enumerate(assigned_items):
        if insights.insights[insight_index].insight_id in surviving:
            covered.update(items)
    coverage = len(covered) / len(pool.items) if pool.items else 0.0
    return InsightSet(scope=insights.scope, insights=final_set, coverage=coverage)


def aggregate_pool(
    pool: FeedbackPool, config: AggregatorConfig, backend: AggregatorBackend
) -> InsightSet:
    if len(pool.items) < config.min_pool_size:
        return InsightSet(scope=pool.scope, note="insufficient data")
    candidates = extract_issue_statements(pool, config, backend)
    if not candidates:
        return InsightSet(scope=pool.scope)
    clustered = cluster_issues(candidates, config, backend, scope=pool.scope)
    return assign_instances(clustered, pool, config, backend)


def aggregate(
    records: Sequence[TraceEvaluationRecord],
    corpus: TraceCorpus,
    config: AggregatorConfig,
    backend: Optional[AggregatorBackend] = None,
) -> tuple[InsightSet, dict[str, InsightSet]]:
    """Run the full extract → cluster → assign pipeline per pool.

    Pools are independent: one pool's failure yields an empty, annotated
    set for that pool and never aborts the others.
    """
    if backend is None:
        backend = make_backend(config)
    system_pool, node_pools = build_pools(records, corpus)

    def safe(pool: FeedbackPool) -> InsightSet:
        try:
            return aggregate_pool(pool, config, backend)
        except Exception as exc:  # noqa: BLE001 - pool isolation boundary
            logger.exception("aggregation failed for pool %s", pool.scope)
            return InsightSet(scope=pool.scope, note=f"aggregation failed: {exc}")

    pools = [system_pool] + [node_pools[node] for node in sorted(node_pools)]
    with ThreadPoolExecutor(max_workers=max(1, min(config.max_workers, len(pools)))) as executor:
        results = list(executor.map(safe, pools))

    system_set = results[0]
    node_sets = {pool.node_id: insight_set for pool, insight_set in zip(pools[1:], results[1:])}
    return system_set, node_sets


# --- mock backend ------------------------------------------------------------------

_SPLIT_RE = re.compile(r";|\s+\band\b\s+")


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().lower()).strip(" .,!?;:")


class MockAggregatorBackend:
    """Deterministic text backend: semicolon/conjunction splitting, exact-match
    clustering after normalization, substring assignment."""

    def extract(self, texts: Sequence[str]) -> list[list[str]]:
        out = []
        for text in texts:
            parts = [p.strip() for p in _SPLIT_RE.split(text)]
            out.append([p for p in parts if p])
        return out

    def cluster(self, candidates: Sequence[str]) -> list[tuple[str, str, list[int]]]:
        groups: dict[str, list[int]] = {}
        first_seen: dict[str, str] = {}
        for index, text in enumerate(candidates):
            key = _normalize(text)
            groups.setdefault(key, []).append(index)
            first_seen.setdefault(key, text.strip())
        clusters = []
        for key in sorted(groups, key=lambda k: (-len(groups[k]), k)):
            members = groups[key]
            title = first_seen[key]
            description = f"Recurring issue reported {len(members)} time(s) in this scope."
            clusters.append((title, description, members))
        return clusters

    def match(self, item_texts: Sequence[str], titles: Sequence[str]) -> list[list[int]]:
        normalized_titles = [_normalize(t) for t in titles]
        out = []
        for text in item_texts:
            normalized = _normalize(text)
            out.append([i for i, t in enumerate(normalized_titles) if t and t in normalized])
        return out


# --- LLM backend -------------------------------------------------------------------

EXTRACT_PROMPT = """You are condensing evaluation critiques of an AI agent into atomic issue statements.
For each numbered critique below, list the distinct problems it reports, one per line, formatted exactly as "ITEM <number>: <issue statement>". Keep each statement self-contained, negative-finding only, under 120 characters. Output nothing for critiques that report no problem.

{body}"""

CLUSTER_PROMPT = """Group the numbered issue statements below into clusters of semantically equivalent issues. Every statement belongs to exactly one cluster.
Output one line per cluster, formatted exactly as:
CLUSTER: <short consolidated title> | <one-sentence description> | members: <comma-separated statement numbers>

{body}"""

MATCH_PROMPT = """Below are recurring issue titles, then evaluation critiques. For each critique, list which issues it exhibits.
Output one line per critique, formatted exactly as "ITEM <number>: <comma-separated issue numbers>" or "ITEM <number>: none".

Issues:
{titles}

Critiques:
{body}"""


class LlmAggregatorBackend:
    """Aggregation phases driven by batched LLM calls.

    ``client`` needs a single ``complete(prompt) -> str`` method (the judge
    transport satisfies it). Unparseable batches are retried once, then
    skipped with a warning.
    """

    def __init__(self, client, batch_size: int = 8) -> None:
        self.client = client
        self.batch_size = batch_size

    def _numbered(self, texts: Sequence[str], offset: int = 0) -> str:
        return "\n".join(f"{offset + i + 1}. {text}" for i, text in enumerate(texts))

    def _item_lines(self, raw: str) -> dict[int, list[str]]:
        found: dict[int, list[str]] = {}
        for match in re.finditer(r"(?im)^[ \t*#>-]*item\s+(\d+)\s*:\s*(.+)$", raw):
            found.setdefault(int(match.group(1)), []).append(match.group(2).strip())
        return found

    def extract(self, texts: Sequence[str]) -> list[list[str]]:
        results: list[list[str]] = [[] for _ in texts]
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start : start + self.batch_size]
            body = "\n\n".join(f"Critique {start + i + 1}:\n{t}" for i, t in enumerate(batch))
            prompt = EXTRACT_PROMPT.format(body=body)
            found: dict[int, list[str]] = {}
            for attempt in range(2):
                found = self._item_lines(self.client.complete(prompt))
                if found:
                    break
            if not found:
                logger.warning("extract batch at offset %d unparseable twice, skipped", start)
                continue
            for number, statements in found.items():
                index = number - 1
                if start <= index < start + len(batch):
                    results[index] = statements
        return results

    def cluster(self, candidates: Sequence[str]) -> list[tuple[str, str, list[int]]]:
        prompt = CLUSTER_PROMPT.format(body=self._numbered(candidates))
        line_re = re.compile(r"(?im)^[ \t*#>-]*cluster\s*:\s*(.+?)\s*\|\s*(.+?)\s*\|\s*members\s*:\s*([\d,\s]+)$")
        clusters: list[tuple[str, str, list[int]]] = []
        for attempt in range(2):
            raw = self.client.complete(prompt)
            clusters = []
            seen: set[int] = set()
            for match in line_re.finditer(raw):
                members = []
                for token in match.group(3).split(","):
                    token = token.strip()
                    if token.isdigit():
                        index = int(token) - 1
                        if 0 <= index < len(candidates) and index not in seen:
                            seen.add(index)
                            members.append(index)
                if members:
                    clusters.append((match.group(1).strip(), match.group(2).strip(), members))
            if clusters:
                return clusters
        raise JudgeError("cluster response unparseable after retry")

    def match(self, item_texts: Sequence[str], titles: Sequence[str]) -> list[list[int]]:
        results: list[list[int]] = [[] for _ in item_texts]
        titles_block = self._numbered(titles)
        for start in range(0, len(item_texts), self.batch_size):
            batch = item_texts[start : start + self.batch_size]
            body = "\n\n".join(f"Critique {start + i + 1}:\n{t}" for i, t in enumerate(batch))
            prompt = MATCH_PROMPT.format(titles=titles_block, body=body)
            found = self._item_lines(self.client.complete(prompt))
            for number, lines in found.items():
                index = number - 1
                if not start <= index < start + len(batch):
                    continue
                hits = []
                for line in lines:
                    for token in re.split(r"[,\s]+", line):
                        if token.isdigit() and 0 <= int(token) - 1 < len(titles):
                            hits.append(int(token) - 1)
                results[index] = sorted(set(hits))
        return results


def make_backend(config: AggregatorConfig, client=None) -> AggregatorBackend:
    if config.backend == "mock":
        return MockAggregatorBackend()
    if config.backend == "llm":
        if client is None:
            raise ValueError("llm aggregator backend requires a transport client")
        return LlmAggregatorBackend(client, batch_size=config.batch_size)
    raise ValueError(f"unknown aggregator backend {config.backend!r}")
