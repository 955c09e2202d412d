// System view: topology graph, global score summary, recurring system issues.

import { forceLayout } from "../layout.js";
import { escapeHtml, fmtScore, scoreChip } from "../format.js";
import { encodeState, DEFAULT_STATE } from "../state.js";
import type { Insight, SystemPayload, TopologyEdge, TopologyNode } from "../types.js";

export interface SystemViewModel {
  nodeCount: number;
  edgeCount: number;
  nodes: TopologyNode[];
  edges: TopologyEdge[];
  entryCounts: Record<string, number>;
  exitCounts: Record<string, number>;
  globalScores: SystemPayload["global_scores"];
  insights: Insight[];
  coverage: number;
  reliability: SystemPayload["reliability"];
}

// Pure pass-through: the model holds exactly what the API returned.
export function buildSystemViewModel(payload: SystemPayload): SystemViewModel {
  const topology = payload.topology ?? { nodes: [], edges: [], entry_counts: {}, exit_counts: {} };
  return {
    nodeCount: topology.nodes.length,
    edgeCount: topology.edges.length,
    nodes: topology.nodes,
    edges: topology.edges,
    entryCounts: topology.entry_counts,
    exitCounts: topology.exit_counts,
    globalScores: payload.global_scores,
    insights: payload.insights.insights,
    coverage: payload.insights.coverage,
    reliability: payload.reliability,
  };
}

function traceLink(traceId: string): string {
  const href = encodeState({ ...DEFAULT_STATE, view: "trace", trace: traceId });
  return `<a href="${href}" class="ref">${escapeHtml(traceId)}</a>`;
}

export function renderTopologySvg(vm: SystemViewModel, width = 640, height = 400, seed = 42): string {
  if (vm.nodes.length === 0) return `<p class="empty">no topology</p>`;
  const positions = forceLayout(vm.nodes, vm.edges, width, height, seed);
  const maxSteps = Math.max(...vm.nodes.map((n) => n.step_count), 1);
  const maxTransitions = Math.max(...vm.edges.map((e) => e.transition_count), 1);
  const parts: string[] = [
    `<svg viewBox="0 0 ${width} ${height}" class="topology" role="img" aria-label="agent topology">`,
  ];
  for (const edge of vm.edges) {
    const a = positions.get(edge.from);
    const b = positions.get(edge.to);
    if (!a || !b) continue;
    const strokeWidth = 1 + 4 * (edge.transition_count / maxTransitions);
    const edgeKey = escapeHtml(`${edge.from}->${edge.to}`);
    if (edge.from === edge.to) {
      parts.push(
        `<circle cx="${(a.x + 24).toFixed(1)}" cy="${(a.y - 24).toFixed(1)}" r="16" class="edge self"` +
          ` stroke-width="${strokeWidth.toFixed(1)}" fill="none" data-edge="${edgeKey}"/>`,
      );
    } else {
      parts.push(
        `<line x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}"` +
          ` class="edge" stroke-width="${strokeWidth.toFixed(1)}" data-edge="${edgeKey}"/>`,
      );
    }
    const mx = edge.from === edge.to ? a.x + 24 : (a.x + b.x) / 2;
    const my = edge.from === edge.to ? a.y - 44 : (a.y + b.y) / 2;
    parts.push(
      `<text x="${mx.toFixed(1)}" y="${my.toFixed(1)}" class="edge-label">${edge.transition_count}</text>`,
    );
  }
  for (const node of vm.nodes) {
    const p = positions.get(node.node_id)!;
    const radius = 14 + 18 * (node.step_count / maxSteps);
    parts.push(
      `<g class="node" data-node="${escapeHtml(node.node_id)}">` +
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="${radius.toFixed(1)}"/>` +
        `<text x="${p.x.toFixed(1)}" y="${(p.y + radius + 14).toFixed(1)}">` +
        `${escapeHtml(node.node_id)} (${node.step_count})</text></g>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

export function renderInsightList(insights: Insight[], heading: string): string {
  if (insights.length === 0) {
    return `<section class="insights"><h2>${escapeHtml(heading)}</h2>` +
      `<p class="empty">no recurring issues found</p></section>`;
  }
  const items = insights
    .map((insight) => {
      const refs = insight.instance_refs
        .map((ref) =>
          ref.step_index === null
            ? traceLink(ref.trace_id)
            : `${traceLink(ref.trace_id)}<span class="stepref">#${ref.step_index}</span>`,
        )
        .join(" ");
      return (
        `<li class="insight" data-insight="${escapeHtml(insight.insight_id)}">` +
        `<span class="freq">${insight.frequency}×</span> ` +
        `<strong>${escapeHtml(insight.title)}</strong>` +
        `<p>${escapeHtml(insight.description)}</p>` +
        `<details><summary>instances</summary><div class="refs">${refs}</div></details></li>`
      );
    })
    .join("");
  return `<section class="insights"><h2>${escapeHtml(heading)}</h2><ol>${items}</ol></section>`;
}

export function renderSystemView(vm: SystemViewModel): string {
  const scores = vm.globalScores;
  const reliability = vm.reliability
    ? `<div class="card"><h3>judge reliability (AUC)</h3><table><tbody>` +
      Object.entries(vm.reliability.auc)
        .map(([method, auc]) => `<tr><td>${escapeHtml(method)}</td><td>${fmtScore(auc)}</td></tr>`)
        .join("") +
      `</tbody></table></div>`
    : "";
  return (
    `<div class="view system-view">` +
    `<div class="summary">` +
    `<div class="card"><h3>topology</h3><p><span data-metric="node-count">${vm.nodeCount}</span> nodes, ` +
    `<span data-metric="edge-count">${vm.edgeCount}</span> edges</p>${renderTopologySvg(vm)}</div>` +
    `<div class="card"><h3>global scores</h3><table><tbody>` +
    `<tr><td>mean trace score</td><td>${scoreChip(scores.mean_trace_score)}</td></tr>` +
    `<tr><td>mean step score</td><td>${scoreChip(scores.mean_step_score)}</td></tr>` +
    `<tr><td>mean rubric fulfillment</td><td>${scoreChip(scores.mean_rubric_fraction)}</td></tr>` +
    `</tbody></table></div>` +
    reliability +
    `</div>` +
    renderInsightList(vm.insights, "recurring system issues") +
    `</div>`
  );
}
