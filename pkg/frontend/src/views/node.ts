// Node view: per-node issues, score histogram, and the filtered step list.
// Filtering happens server-side; the rows rendered are exactly the rows the
// API returned for the current query.

import { escapeHtml, fmtScore, scoreChip } from "../format.js";
import { encodeState, DEFAULT_STATE, type ViewState } from "../state.js";
import type { NodeDetailPayload, StepRow } from "../types.js";
import { renderInsightList } from "./system.js";

export interface NodeViewModel {
  nodeId: string;
  stats: NodeDetailPayload["stats"];
  insights: NodeDetailPayload["insights"]["insights"];
  note: string | null;
  steps: StepRow[];
  total: number;
  limit: number;
  offset: number;
}

export function buildNodeViewModel(payload: NodeDetailPayload): NodeViewModel {
  return {
    nodeId: payload.node_id,
    stats: payload.stats,
    insights: payload.insights.insights,
    note: payload.insights.note,
    steps: payload.steps, // verbatim: no client-side re-filtering
    total: payload.total,
    limit: payload.limit,
    offset: payload.offset,
  };
}

export function renderHistogram(histogram: number[]): string {
  const peak = Math.max(...histogram, 1);
  const bars = histogram
    .map((count, bin) => {
      const height = (100 * count) / peak;
      const label = `${(bin / 10).toFixed(1)}–${((bin + 1) / 10).toFixed(1)}`;
      return (
        `<div class="bar" title="${label}: ${count}">` +
        `<div class="fill" style="height:${height.toFixed(0)}%"></div>` +
        `<span class="count">${count || ""}</span></div>`
      );
    })
    .join("");
  return `<div class="histogram" data-bins="${histogram.join(",")}">${bars}</div>`;
}

function stepRowHtml(step: StepRow): string {
  const traceHref = encodeState({ ...DEFAULT_STATE, view: "trace", trace: step.trace_id });
  const insightTags = step.insight_ids
    .map((id) => `<span class="tag" data-insight="${escapeHtml(id)}">${escapeHtml(id)}</span>`)
    .join(" ");
  return (
    `<tr data-step="${escapeHtml(step.trace_id)}:${step.step_index}">` +
    `<td><a href="${traceHref}">${escapeHtml(step.trace_id)}</a>#${step.step_index}</td>` +
    `<td>${scoreChip(step.score)}</td>` +
    `<td class="just">${escapeHtml(step.justification ?? "(not evaluated)")}</td>` +
    `<td>${insightTags}</td></tr>`
  );
}

export function renderNodeView(vm: NodeViewModel, state: ViewState): string {
  const stats = vm.stats;
  const statsCard = stats
    ? `<div class="card"><h3>usage</h3>` +
      `<p>${stats.step_count} steps, ${stats.scored_steps} scored</p>` +
      `<p>mean ${fmtScore(stats.mean_score)} · min ${fmtScore(stats.min_score)} · max ${fmtScore(stats.max_score)}</p>` +
      renderHistogram(stats.histogram) +
      `</div>`
    : "";
  const filterBar =
    `<form class="filters" data-role="filters">` +
    `<label>min score <input type="number" name="min_score" min="0" max="1" step="0.05"` +
    ` value="${state.minScore ?? ""}"/></label>` +
    `<label>max score <input type="number" name="max_score" min="0" max="1" step="0.05"` +
    ` value="${state.maxScore ?? ""}"/></label>` +
    `<label>issue <input type="text" name="insight" value="${escapeHtml(state.insight ?? "")}"` +
    ` placeholder="insight id"/></label>` +
    `<button type="submit">apply</button> <button type="button" data-role="clear">clear</button></form>`;
  const rows = vm.steps.map(stepRowHtml).join("");
  const table =
    vm.steps.length > 0
      ? `<table class="steps"><thead><tr><th>step</th><th>score</th><th>judge justification</th>` +
        `<th>issues</th></tr></thead><tbody>${rows}</tbody></table>`
      : `<p class="empty">no steps match the current filters</p>`;
  const shownFrom = vm.total === 0 ? 0 : vm.offset + 1;
  const shownTo = Math.min(vm.offset + vm.limit, vm.total);
  const pager =
    `<div class="pager">showing ${shownFrom}–${shownTo} of ${vm.total}` +
    (vm.offset > 0 ? ` <button data-role="prev">prev</button>` : "") +
    (shownTo < vm.total ? ` <button data-role="next">next</button>` : "") +
    `</div>`;
  const note = vm.note ? `<p class="note">${escapeHtml(vm.note)}</p>` : "";
  return (
    `<div class="view node-view"><h2>node: ${escapeHtml(vm.nodeId)}</h2>` +
    `<div class="summary">${statsCard}</div>` +
    note +
    renderInsightList(vm.insights, "recurring issues for this node") +
    `<section class="steplist"><h2>steps</h2>${filterBar}${table}${pager}</section></div>`
  );
}
