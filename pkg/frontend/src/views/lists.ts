// Picker screens: the node index and the searchable trace list.

import { escapeHtml, fmtScore, scoreChip } from "../format.js";
import { encodeState, DEFAULT_STATE, type ViewState } from "../state.js";
import type { NodeListPayload, TraceListPayload } from "../types.js";

export function renderNodeList(payload: NodeListPayload): string {
  const rows = payload.nodes
    .map((stats) => {
      const href = encodeState({ ...DEFAULT_STATE, view: "node", node: stats.node_id });
      return (
        `<tr><td><a href="${href}">${escapeHtml(stats.node_id)}</a></td>` +
        `<td>${stats.step_count}</td><td>${stats.scored_steps}</td>` +
        `<td>${fmtScore(stats.mean_score)}</td></tr>`
      );
    })
    .join("");
  return (
    `<div class="view node-list"><h2>nodes</h2>` +
    `<table><thead><tr><th>node</th><th>steps</th><th>scored</th><th>mean score</th></tr></thead>` +
    `<tbody>${rows}</tbody></table></div>`
  );
}

export function renderTraceList(payload: TraceListPayload, state: ViewState): string {
  const searchBar =
    `<form class="filters" data-role="search">` +
    `<input type="search" name="search" placeholder="search tasks and ids"` +
    ` value="${escapeHtml(state.search ?? "")}"/>` +
    `<button type="submit">search</button></form>`;
  const rows = payload.traces
    .map((trace) => {
      const href = encodeState({ ...DEFAULT_STATE, view: "trace", trace: trace.trace_id });
      return (
        `<tr><td><a href="${href}">${escapeHtml(trace.trace_id)}</a></td>` +
        `<td class="task-preview">${escapeHtml(trace.task_preview)}</td>` +
        `<td>${trace.n_steps}</td>` +
        `<td>${scoreChip(trace.trace_score)}</td>` +
        `<td>${fmtScore(trace.rubric_fraction)}</td>` +
        `<td>${fmtScore(trace.ground_truth)}</td></tr>`
      );
    })
    .join("");
  const table =
    payload.traces.length > 0
      ? `<table><thead><tr><th>trace</th><th>task</th><th>steps</th><th>trace score</th>` +
        `<th>rubrics</th><th>ground truth</th></tr></thead><tbody>${rows}</tbody></table>`
      : `<p class="empty">no traces match the search</p>`;
  const shownFrom = payload.total === 0 ? 0 : payload.offset + 1;
  const shownTo = Math.min(payload.offset + payload.limit, payload.total);
  const pager =
    `<div class="pager">showing ${shownFrom}–${shownTo} of ${payload.total}` +
    (payload.offset > 0 ? ` <button data-role="prev">prev</button>` : "") +
    (shownTo < payload.total ? ` <button data-role="next">next</button>` : "") +
    `</div>`;
  return `<div class="view trace-list"><h2>traces</h2>${searchBar}${table}${pager}</div>`;
}
