import { describe, expect, it } from "vitest";

import { buildTraceViewModel, renderTraceView, rubricSummaryText } from "../src/views/trace.js";
import type { TraceDetailPayload } from "../src/types.js";
import { fixture } from "./helpers.js";

const t03 = fixture<TraceDetailPayload>("trace_t03.json");
const fourRubrics = fixture<TraceDetailPayload>("trace_rubric4.json");

describe("trace view", () => {
  it("renders the 3-of-4 rubric summary as 3/4 (0.75)", () => {
    const vm = buildTraceViewModel(fourRubrics);
    expect(vm.fulfilledCount).toBe(3);
    expect(vm.rubricTotal).toBe(4);
    expect(vm.rubricFraction).toBe(0.75); // fetched, not recomputed
    expect(rubricSummaryText(vm)).toBe("3/4 (0.75)");
    expect(renderTraceView(vm)).toContain("3/4 (0.75)");
  });

  it("shows one rubric row per criterion with its fulfillment reasoning", () => {
    const vm = buildTraceViewModel(fourRubrics);
    const html = renderTraceView(vm);
    for (const verdict of fourRubrics.evaluation!.rubric_verdicts!.verdicts) {
      expect(html).toContain(`data-rubric="${verdict.rubric_id}"`);
      expect(html).toContain(verdict.reasoning);
    }
    expect(html).toContain("no polite closing anywhere");
  });

  it("renders per-step dimension scores verbatim from the payload", () => {
    const vm = buildTraceViewModel(t03);
    for (const critique of t03.evaluation!.step_critiques) {
      const step = vm.steps.find((s) => s.stepIndex === critique.step_index)!;
      expect(step.dimensionScores).toEqual(critique.dimension_scores);
    }
    const html = renderTraceView(vm);
    for (const critique of t03.evaluation!.step_critiques) {
      for (const [name, value] of Object.entries(critique.dimension_scores)) {
        expect(html).toContain(`data-dim="${name}"`);
        expect(html).toContain(`${name} ${value.toFixed(2)}`);
      }
    }
  });

  it("renders the judge's trace critique score and justification", () => {
    const vm = buildTraceViewModel(t03);
    expect(vm.traceScore).toBe(t03.evaluation!.trace_critique!.score);
    const html = renderTraceView(vm);
    expect(html).toContain(t03.evaluation!.trace_critique!.justification);
    expect(html).toContain(t03.evaluation!.trace_critique!.score.toFixed(2));
  });

  it("marks steps without critiques as unevaluated", () => {
    const stripped: TraceDetailPayload = JSON.parse(JSON.stringify(t03));
    stripped.evaluation!.step_critiques = [];
    const html = renderTraceView(buildTraceViewModel(stripped));
    const badgeCount = html.split("unevaluated").length - 1;
    expect(badgeCount).toBeGreaterThanOrEqual(stripped.trace.steps.length);
  });

  it("handles a missing evaluation without crashing", () => {
    const bare: TraceDetailPayload = {
      ...t03,
      evaluation: null,
    };
    const html = renderTraceView(buildTraceViewModel(bare));
    expect(html).toContain("trace mode was not run");
    expect(html).toContain("rubric mode was not run");
  });

  it("escapes HTML in step outputs", () => {
    const hostile: TraceDetailPayload = JSON.parse(JSON.stringify(t03));
    hostile.trace.steps[0].output_text = "<script>alert(1)</script>";
    const html = renderTraceView(buildTraceViewModel(hostile));
    expect(html).not.toContain("<script>alert(1)</script>");
    expect(html).toContain("&lt;script&gt;");
  });
});
