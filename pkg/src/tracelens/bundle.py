"""The versioned results archive: one ZIP holding corpus, evaluations,
insights and analytics, written once by the pipeline and read by the server.

Serialization is deterministic: canonical JSON, fixed member order, fixed
ZIP entry timestamps. Writing refuses internally inconsistent artifacts.
"""

from __future__ import annotations

import json
import urllib.parse
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from .analytics import NodeStats, ReliabilityReport, TopologyGraph
from .errors import BundleReferenceError, CorruptBundle, VersionMismatch
from .insights import InsightSet
from .judging import TraceEvaluationRecord
from .model import Trace, TraceCorpus

FORMAT_VERSION = 1

MANIFEST_MEMBER = "manifest.json"
# fixed entry timestamp keeps re-written archives byte-identical
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def canonical_json(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def node_member_name(node_id: str) -> str:
    return f"insights/nodes/{urllib.parse.quote(node_id, safe='')}.json"


@dataclass
class EvaluationBundle:
    manifest: dict[str, Any]
    corpus: TraceCorpus
    records: tuple[TraceEvaluationRecord, ...]
    system_insights: InsightSet
    node_insights: dict[str, InsightSet] = field(default_factory=dict)
    topology: Optional[TopologyGraph] = None
    node_stats: dict[str, NodeStats] = field(default_factory=dict)
    reliability: Optional[ReliabilityReport] = None


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise BundleReferenceError(message)


def validate_bundle(bundle: EvaluationBundle) -> None:
    """Every cross-reference must resolve inside the bundle."""
    traces = {t.trace_id: t for t in bundle.corpus.traces}
    catalog = set(bundle.corpus.node_catalog)

    for record in bundle.records:
        trace = traces.get(record.trace_id)
        _check(trace is not None, f"evaluation references unknown trace {record.trace_id}")
        for critique in record.step_critiques:
            _check(
                0 <= critique.step_index < trace.n_steps,
                f"critique references missing step {record.trace_id}[{critique.step_index}]",
            )
        if record.rubric_set is not None and record.rubric_verdicts is not None:
            set_ids = {r.rubric_id for r in record.rubric_set.rubrics}
            verdict_ids = {v.rubric_id for v in record.rubric_verdicts.verdicts}
            _check(
                set_ids == verdict_ids,
                f"trace {record.trace_id}: verdicts cover {sorted(verdict_ids)},"
                f" rubric set has {sorted(set_ids)}",
            )

    def check_refs(insight_set: InsightSet, node_id: Optional[str] = None) -> None:
        for insight in insight_set.insights:
            _check(
                insight.frequency == len(insight.instance_refs),
                f"insight {insight.insight_id}: frequency {insight.frequency}"
                f" != {len(insight.instance_refs)} refs",
            )
            for ref in insight.instance_refs:
                trace = traces.get(ref.trace_id)
                _check(trace is not None, f"insight {insight.insight_id} references unknown trace {ref.trace_id}")
                if ref.step_index is not None:
                    _check(
                        0 <= ref.step_index < trace.n_steps,
                        f"insight {insight.insight_id} references missing step"
                        f" {ref.trace_id}[{ref.step_index}]",
                    )
                    if node_id is not None:
                        _check(
                            trace.steps[ref.step_index].node_id == node_id,
                            f"insight {insight.insight_id} references step of another node",
                        )

    check_refs(bundle.system_insights)
    for node_id, insight_set in bundle.node_insights.items():
        _check(node_id in catalog, f"insights for unknown node {node_id}")
        check_refs(insight_set, node_id)

    for node_id in bundle.node_stats:
        _check(node_id in catalog, f"stats for unknown node {node_id}")
    if bundle.topology is not None:
        for node in bundle.topology.nodes:
            _check(node["node_id"] in catalog, f"topology references unknown node {node['node_id']}")


def write_bundle(bundle: EvaluationBundle, path: str | Path) -> Path:
    """Write the archive with deterministic member ordering and timestamps."""
    validate_bundle(bundle)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    members: list[tuple[str, bytes]] = [(MANIFEST_MEMBER, canonical_json(bundle.manifest))]
    for trace in bundle.corpus.traces:
        members.append((f"corpus/{urllib.parse.quote(trace.trace_id, safe='')}.json",
                        canonical_json(trace.to_dict())))
    for record in bundle.records:
        members.append((f"evaluations/{urllib.parse.quote(record.trace_id, safe='')}.json",
                        canonical_json(record.to_dict())))
    members.append(("insights/system.json", canonical_json(bundle.system_insights.to_dict())))
    for node_id in sorted(bundle.node_insights):
        members.append((node_member_name(node_id), canonical_json(bundle.node_insights[node_id].to_dict())))
    if bundle.topology is not None:
        members.append(("analytics/topology.json", canonical_json(bundle.topology.to_dict())))
    members.append((
        "analytics/node_stats.json",
        canonical_json({node: stats.to_dict() for node, stats in sorted(bundle.node_stats.items())}),
    ))
    if bundle.reliability is not None:
        members.append(("analytics/reliability.json", canonical_json(bundle.reliability.to_dict())))

    ordered = [members[0]] + sorted(members[1:], key=lambda m: m[0])
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name, payload in ordered:
            info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, payload)
    return path


def _read_json(zf: zipfile.ZipFile, name: str) -> Any:
    try:
        raw = zf.read(name)
    except KeyError as exc:
        raise CorruptBundle(f"bundle member missing: {name}") from exc
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptBundle(f"bundle member {name} is not valid JSON: {exc}") from exc


def read_bundle(path: str | Path) -> EvaluationBundle:
    path = Path(path)
    if not path.is_file():
        raise CorruptBundle(f"no such bundle: {path}")
    try:
        zf = zipfile.ZipFile(path)
    except zipfile.BadZipFile as exc:
        raise CorruptBundle(f"{path} is not a ZIP archive: {exc}") from exc

    with zf:
        names = set(zf.namelist())
        if MANIFEST_MEMBER not in names:
            raise CorruptBundle(f"{path}: archive has no {MANIFEST_MEMBER}")
        manifest = _read_json(zf, MANIFEST_MEMBER)
        if not isinstance(manifest, dict) or "format_version" not in manifest:
            raise CorruptBundle(f"{path}: manifest lacks format_version")
        version = manifest["format_version"]
        if not isinstance(version, int) or version > FORMAT_VERSION:
            raise VersionMismatch(
                f"bundle format_version {version} exceeds reader version {FORMAT_VERSION}"
            )

        traces = [
            Trace.from_dict(_read_json(zf, name))
            for name in sorted(names)
            if name.startswith("corpus/") and name.endswith(".json")
        ]
        if not traces:
            raise CorruptBundle(f"{path}: bundle holds no traces")
        traces.sort(key=lambda t: t.trace_id)
        corpus_summary = manifest.get("corpus", {})
        corpus = TraceCorpus(
            corpus_id=corpus_summary.get("corpus_id", path.stem), traces=tuple(traces)
        )

        records = tuple(
            TraceEvaluationRecord.from_dict(_read_json(zf, name))
            for name in sorted(names)
            if name.startswith("evaluations/") and name.endswith(".json")
        )

        system_insights = (
            InsightSet.from_dict(_read_json(zf, "insights/system.json"))
            if "insights/system.json" in names
            else InsightSet(scope="system")
        )
        node_insights: dict[str, InsightSet] = {}
        for name in sorted(names):
            if name.startswith("insights/nodes/") and name.endswith(".json"):
                insight_set = InsightSet.from_dict(_read_json(zf, name))
                node_id = insight_set.scope.split(":", 1)[1] if ":" in insight_set.scope else insight_set.scope
                node_insights[node_id] = insight_set

        topology = (
            TopologyGraph.from_dict(_read_json(zf, "analytics/topology.json"))
            if "analytics/topology.json" in names
            else None
        )
        node_stats = {}
        if "analytics/node_stats.json" in names:
            node_stats = {
                node: NodeStats.from_dict(payload)
                for node, payload in _read_json(zf, "analytics/node_stats.json").items()
            }
        reliability = (
            ReliabilityReport.from_dict(_read_json(zf, "analytics/reliability.json"))
            if "analytics/reliability.json" in names
            else None
        )

    bundle = EvaluationBundle(
        manifest=manifest,
        corpus=corpus,
        records=records,
        system_insights=system_insights,
        node_insights=node_insights,
        topology=topology,
        node_stats=node_stats,
        reliability=reliability,
    )
    validate_bundle(bundle)
    return bundle


def build_manifest(
    *,
    created_at: str,
    config_snapshot: dict[str, Any],
    corpus: TraceCorpus,
    judge_model: str,
    judge_backend: str,
    notes: Sequence[str] = (),
    load_failures: Sequence[dict[str, Any]] = (),
    evaluation_failures: Sequence[Sequence[str]] = (),
) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "created_at": created_at,
        "config": config_snapshot,
        "corpus": corpus.summary(),
        "judge": {"model_name": judge_model, "backend": judge_backend},
        "notes": list(notes),
        "load_failures": [dict(f) for f in load_failures],
        "evaluation_failures": [list(f) for f in evaluation_failures],
    }
