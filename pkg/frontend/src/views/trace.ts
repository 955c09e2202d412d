// Trace view: holistic critique, rubric table with fulfillment reasoning,
// and the step timeline with per-step dimension scores.

import { escapeHtml, fmtScore, scoreChip } from "../format.js";
import type { RubricPayload, RubricVerdictPayload, TraceDetailPayload } from "../types.js";

export interface RubricRow {
  rubricId: string;
  criterion: string;
  fulfilled: boolean | null;
  reasoning: string;
}

export interface TraceViewModel {
  traceId: string;
  taskText: string;
  groundTruth: number | null;
  traceScore: number | null;
  traceJustification: string | null;
  traceDimensions: Record<string, number>;
  rubricRows: RubricRow[];
  fulfilledCount: number;
  rubricTotal: number;
  // fetched, never recomputed: the API's fraction_fulfilled
  rubricFraction: number | null;
  steps: {
    stepIndex: number;
    nodeId: string;
    inputText: string;
    outputText: string;
    score: number | null;
    justification: string | null;
    dimensionScores: Record<string, number>;
  }[];
}

export function buildTraceViewModel(payload: TraceDetailPayload): TraceViewModel {
  const evaluation = payload.evaluation;
  const rubrics: RubricPayload[] = evaluation?.rubric_set?.rubrics ?? [];
  const verdictsById = new Map<string, RubricVerdictPayload>(
    (evaluation?.rubric_verdicts?.verdicts ?? []).map((v) => [v.rubric_id, v]),
  );
  const rubricRows: RubricRow[] = rubrics.map((rubric) => {
    const verdict = verdictsById.get(rubric.rubric_id);
    return {
      rubricId: rubric.rubric_id,
      criterion: rubric.criterion_text,
      fulfilled: verdict ? verdict.fulfilled : null,
      reasoning: verdict?.reasoning ?? "",
    };
  });
  const critiquesByStep = new Map(
    (evaluation?.step_critiques ?? []).map((c) => [c.step_index, c]),
  );
  return {
    traceId: payload.trace.trace_id,
    taskText: payload.trace.task_text,
    groundTruth: payload.trace.ground_truth,
    traceScore: evaluation?.trace_critique?.score ?? null,
    traceJustification: evaluation?.trace_critique?.justification ?? null,
    traceDimensions: evaluation?.trace_critique?.dimension_scores ?? {},
    rubricRows,
    fulfilledCount: rubricRows.filter((r) => r.fulfilled === true).length,
    rubricTotal: rubricRows.length,
    rubricFraction: evaluation?.rubric_verdicts?.fraction_fulfilled ?? null,
    steps: payload.trace.steps.map((step) => {
      const critique = critiquesByStep.get(step.step_index);
      return {
        stepIndex: step.step_index,
        nodeId: step.node_id,
        inputText: step.input_text,
        outputText: step.output_text,
        score: critique?.score ?? null,
        justification: critique?.justification ?? null,
        dimensionScores: critique?.dimension_scores ?? {},
      };
    }),
  };
}

export function rubricSummaryText(vm: TraceViewModel): string {
  if (vm.rubricTotal === 0) return "no rubrics";
  return `${vm.fulfilledCount}/${vm.rubricTotal} (${fmtScore(vm.rubricFraction)})`;
}

function dimensionChips(scores: Record<string, number>): string {
  return Object.entries(scores)
    .map(
      ([name, value]) =>
        `<span class="dim" data-dim="${escapeHtml(name)}">${escapeHtml(name)} ${fmtScore(value)}</span>`,
    )
    .join(" ");
}

export function renderTraceView(vm: TraceViewModel): string {
  const rubricRows = vm.rubricRows
    .map((row) => {
      const state =
        row.fulfilled === null ? "unknown" : row.fulfilled ? "fulfilled" : "not-fulfilled";
      const mark = row.fulfilled === null ? "?" : row.fulfilled ? "✓" : "✗";
      return (
        `<tr class="${state}" data-rubric="${escapeHtml(row.rubricId)}">` +
        `<td>${mark}</td><td>${escapeHtml(row.criterion)}</td>` +
        `<td class="reasoning">${escapeHtml(row.reasoning)}</td></tr>`
      );
    })
    .join("");
  const rubricSection =
    vm.rubricTotal > 0
      ? `<section class="rubrics"><h2>rubrics <span class="rubric-summary">${rubricSummaryText(vm)}</span></h2>` +
        `<table><thead><tr><th></th><th>criterion</th><th>fulfillment reasoning</th></tr></thead>` +
        `<tbody>${rubricRows}</tbody></table></section>`
      : `<section class="rubrics"><h2>rubrics</h2><p class="empty">rubric mode was not run</p></section>`;

  const timeline = vm.steps
    .map((step) => {
      const badge =
        step.score === null
          ? `<span class="badge unevaluated">unevaluated</span>`
          : scoreChip(step.score);
      const justification = step.justification
        ? `<p class="just">${escapeHtml(step.justification)}</p>`
        : "";
      return (
        `<li class="step" data-step="${step.stepIndex}">` +
        `<header><span class="node">${escapeHtml(step.nodeId)}</span> step ${step.stepIndex} ${badge} ` +
        `${dimensionChips(step.dimensionScores)}</header>` +
        justification +
        `<details><summary>input</summary><pre>${escapeHtml(step.inputText)}</pre></details>` +
        `<details open><summary>output</summary><pre>${escapeHtml(step.outputText)}</pre></details></li>`
      );
    })
    .join("");

  const groundTruth =
    vm.groundTruth === null ? "" : ` · ground truth ${fmtScore(vm.groundTruth)}`;
  const critique = vm.traceScore === null
    ? `<p class="empty">trace mode was not run</p>`
    : `<p>${scoreChip(vm.traceScore)} ${dimensionChips(vm.traceDimensions)}</p>` +
      `<p class="just">${escapeHtml(vm.traceJustification ?? "")}</p>`;

  return (
    `<div class="view trace-view"><h2>trace: ${escapeHtml(vm.traceId)}${groundTruth}</h2>` +
    `<section class="task"><h2>task</h2><pre>${escapeHtml(vm.taskText)}</pre></section>` +
    `<section class="critique"><h2>trace critique</h2>${critique}</section>` +
    rubricSection +
    `<section class="timeline"><h2>steps</h2><ol>${timeline}</ol></section></div>`
  );
}
