"""Read-only REST API over a loaded bundle, plus static dashboard hosting."""

from __future__ import annotations

import logging
import socket
import statistics
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Query
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .bundle import FORMAT_VERSION, EvaluationBundle
from .errors import BindError
from .insights import InsightSet

logger = logging.getLogger(__name__)

DEFAULT_LIMIT = 100
MAX_LIMIT = 1000
PREVIEW_CHARS = 240


def _preview(text: str) -> str:
    return text if len(text) <= PREVIEW_CHARS else text[:PREVIEW_CHARS] + "…"


def _not_found(code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=404,
        content={"format_version": FORMAT_VERSION, "error": {"code": code, "message": message}},
    )


class BundleIndex:
    """Denormalized, immutable view of a bundle for request serving."""

    def __init__(self, bundle: EvaluationBundle) -> None:
        self.bundle = bundle
        self.traces = {t.trace_id: t for t in bundle.corpus.traces}
        self.records = {r.trace_id: r for r in bundle.records}

        # per-node step rows joined with critiques and insight links
        step_insights: dict[tuple[str, int], list[str]] = {}
        for insight_set in bundle.node_insights.values():
            for insight in insight_set.insights:
                for ref in insight.instance_refs:
                    if ref.step_index is not None:
                        step_insights.setdefault((ref.trace_id, ref.step_index), []).append(
                            insight.insight_id
                        )
        trace_insights: dict[str, list[str]] = {}
        for insight in bundle.system_insights.insights:
            for ref in insight.instance_refs:
                trace_insights.setdefault(ref.trace_id, []).append(insight.insight_id)
        self.trace_insights = trace_insights

        critiques = {}
        for record in bundle.records:
            for critique in record.step_critiques:
                critiques[(critique.trace_id, critique.step_index)] = critique

        self.node_steps: dict[str, list[dict[str, Any]]] = {
            node: [] for node in bundle.corpus.node_catalog
        }
        for trace in bundle.corpus.traces:
            for step in trace.steps:
                key = (trace.trace_id, step.step_index)
                critique = critiques.get(key)
                self.node_steps[step.node_id].append(
                    {
                        "trace_id": trace.trace_id,
                        "step_index": step.step_index,
                        "node_id": step.node_id,
                        "score": critique.score if critique else None,
                        "justification": critique.justification if critique else None,
                        "dimension_scores": critique.dimension_scores if critique else {},
                        "input_preview": _preview(step.input_text),
                        "output_preview": _preview(step.output_text),
                        "insight_ids": sorted(step_insights.get(key, [])),
                    }
                )

        trace_scores = [r.trace_critique.score for r in bundle.records if r.trace_critique]
        step_scores = [c.score for r in bundle.records for c in r.step_critiques]
        rubric_fractions = [
            r.rubric_verdicts.fraction_fulfilled for r in bundle.records if r.rubric_verdicts
        ]
        self.global_scores = {
            "mean_trace_score": statistics.mean(trace_scores) if trace_scores else None,
            "mean_step_score": statistics.mean(step_scores) if step_scores else None,
            "mean_rubric_fraction": statistics.mean(rubric_fractions) if rubric_fractions else None,
        }

    def insight_catalog(self) -> list[dict[str, Any]]:
        catalog = [
            {"insight_id": i.insight_id, "title": i.title, "scope": i.scope}
            for i in self.bundle.system_insights.insights
        ]
        for node in sorted(self.bundle.node_insights):
            catalog.extend(
                {"insight_id": i.insight_id, "title": i.title, "scope": i.scope}
                for i in self.bundle.node_insights[node].insights
            )
        return catalog


def filter_steps(
    steps: list[dict[str, Any]],
    *,
    min_score: Optional[float] = None,
    max_score: Optional[float] = None,
    insight: Optional[str] = None,
) -> list[dict[str, Any]]:
    """Conjunctive filters; score bounds are inclusive and drop unscored steps."""
    out = []
    for step in steps:
        if min_score is not None and (step["score"] is None or step["score"] < min_score):
            continue
        if max_score is not None and (step["score"] is None or step["score"] > max_score):
            continue
        if insight is not None and insight not in step["insight_ids"]:
            continue
        out.append(step)
    return out


def _page(items: list, limit: int, offset: int) -> list:
    return items[offset : offset + limit]


def create_app(bundle: EvaluationBundle, static_dir: Optional[str | Path] = None) -> FastAPI:
    index = BundleIndex(bundle)
    app = FastAPI(title="tracelens", version=str(FORMAT_VERSION))

    @app.get("/api/meta")
    def meta() -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "manifest": bundle.manifest,
            "trace_ids": [t.trace_id for t in bundle.corpus.traces],
            "node_ids": list(bundle.corpus.node_catalog),
            "insights": index.insight_catalog(),
        }

    @app.get("/api/system")
    def system() -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "topology": bundle.topology.to_dict() if bundle.topology else None,
            "global_scores": index.global_scores,
            "insights": bundle.system_insights.to_dict(),
            "reliability": bundle.reliability.to_dict() if bundle.reliability else None,
        }

    @app.get("/api/nodes")
    def nodes() -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "nodes": [
                bundle.node_stats[node].to_dict()
                for node in bundle.corpus.node_catalog
                if node in bundle.node_stats
            ],
        }

    @app.get("/api/nodes/{node_id}")
    def node_detail(
        node_id: str,
        min_score: Optional[float] = Query(default=None, ge=0.0, le=1.0),
        max_score: Optional[float] = Query(default=None, ge=0.0, le=1.0),
        insight: Optional[str] = None,
        limit: int = Query(default=DEFAULT_LIMIT, ge=1, le=MAX_LIMIT),
        offset: int = Query(default=0, ge=0),
    ):
        if node_id not in index.node_steps:
            return _not_found("unknown_node", f"no node {node_id!r} in this bundle")
        filtered = filter_steps(
            index.node_steps[node_id], min_score=min_score, max_score=max_score, insight=insight
        )
        stats = bundle.node_stats.get(node_id)
        insight_set = bundle.node_insights.get(node_id, InsightSet(scope=f"node:{node_id}"))
        return {
            "format_version": FORMAT_VERSION,
            "node_id": node_id,
            "stats": stats.to_dict() if stats else None,
            "insights": insight_set.to_dict(),
            "steps": _page(filtered, limit, offset),
            "total": len(filtered),
            "limit": limit,
            "offset": offset,
        }

    @app.get("/api/traces")
    def traces(
        search: Optional[str] = None,
        limit: int = Query(default=DEFAULT_LIMIT, ge=1, le=MAX_LIMIT),
        offset: int = Query(default=0, ge=0),
    ) -> dict[str, Any]:
        rows = []
        for trace in bundle.corpus.traces:
            if search:
                haystack = f"{trace.trace_id}\n{trace.task_text}".lower()
                if search.lower() not in haystack:
                    continue
            record = index.records.get(trace.trace_id)
            rows.append(
                {
                    "trace_id": trace.trace_id,
                    "task_preview": _preview(trace.task_text),
                    "n_steps": trace.n_steps,
                    "ground_truth": trace.ground_truth,
                    "trace_score": record.trace_critique.score
                    if record and record.trace_critique
                    else None,
                    "rubric_fraction": record.rubric_verdicts.fraction_fulfilled
                    if record and record.rubric_verdicts
                    else None,
                }
            )
        return {
            "format_version": FORMAT_VERSION,
            "traces": _page(rows, limit, offset),
            "total": len(rows),
            "limit": limit,
            "offset": offset,
        }

    @app.get("/api/traces/{trace_id}")
    def trace_detail(trace_id: str):
        trace = index.traces.get(trace_id)
        if trace is None:
            return _not_found("unknown_trace", f"no trace {trace_id!r} in this bundle")
        record = index.records.get(trace_id)
        return {
            "format_version": FORMAT_VERSION,
            "trace": trace.to_dict(),
            "evaluation": record.to_dict() if record else None,
            "system_insight_ids": sorted(index.trace_insights.get(trace_id, [])),
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")
    else:
        @app.get("/", response_class=HTMLResponse)
        def root() -> str:
            return (
                "<html><body><h1>tracelens API</h1><p>No dashboard assets configured. "
                "Endpoints: /api/meta, /api/system, /api/nodes, /api/nodes/{id}, "
                "/api/traces, /api/traces/{id}</p></body></html>"
            )

    return app


def serve(
    bundle: EvaluationBundle,
    bind_address: str = "127.0.0.1",
    port: int = 8050,
    static_dir: Optional[str | Path] = None,
) -> None:
    """Block serving the bundle; raises BindError when the port is taken."""
    import uvicorn

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((bind_address, port))
    except OSError as exc:
        raise BindError(f"cannot bind {bind_address}:{port}: {exc}") from exc
    finally:
        probe.close()

    app = create_app(bundle, static_dir=static_dir)
    logger.info("serving bundle on http://%s:%d", bind_address, port)
    uvicorn.run(app, host=bind_address, port=port, log_level="info")
