import { describe, expect, it } from "vitest";

import { buildSystemViewModel, renderSystemView, renderTopologySvg } from "../src/views/system.js";
import type { SystemPayload } from "../src/types.js";
import { fixture } from "./helpers.js";

const payload = fixture<SystemPayload>("system.json");

describe("system view", () => {
  it("renders node and edge counts equal to /api/system", () => {
    const vm = buildSystemViewModel(payload);
    expect(vm.nodeCount).toBe(payload.topology!.nodes.length);
    expect(vm.edgeCount).toBe(payload.topology!.edges.length);
    const html = renderSystemView(vm);
    expect(html).toContain(`<span data-metric="node-count">${payload.topology!.nodes.length}</span>`);
    expect(html).toContain(`<span data-metric="edge-count">${payload.topology!.edges.length}</span>`);
  });

  it("passes every fetched number through untouched", () => {
    const vm = buildSystemViewModel(payload);
    expect(vm.globalScores).toEqual(payload.global_scores);
    expect(vm.nodes).toEqual(payload.topology!.nodes);
    expect(vm.edges).toEqual(payload.topology!.edges);
    expect(vm.insights).toEqual(payload.insights.insights);
    expect(vm.coverage).toBe(payload.insights.coverage);
  });

  it("renders insights in the payload's frequency order", () => {
    const html = renderSystemView(buildSystemViewModel(payload));
    let cursor = -1;
    for (const insight of payload.insights.insights) {
      const at = html.indexOf(`data-insight="${insight.insight_id}"`);
      expect(at).toBeGreaterThan(cursor);
      cursor = at;
    }
  });

  it("lists exactly the instance refs of each insight", () => {
    const vm = buildSystemViewModel(payload);
    for (const insight of vm.insights) {
      expect(insight.instance_refs.length).toBe(insight.frequency);
    }
    const html = renderSystemView(vm);
    const topInsight = payload.insights.insights[0];
    for (const ref of topInsight.instance_refs) {
      expect(html).toContain(`#/trace/${ref.trace_id}`);
    }
  });

  it("renders global scores rounded to two decimals only", () => {
    const html = renderSystemView(buildSystemViewModel(payload));
    const mean = payload.global_scores.mean_trace_score!;
    expect(html).toContain(mean.toFixed(2));
  });

  it("shows an explicit empty state when there are no insights", () => {
    const empty: SystemPayload = {
      ...payload,
      insights: { scope: "system", insights: [], coverage: 0, note: null },
    };
    const html = renderSystemView(buildSystemViewModel(empty));
    expect(html).toContain("no recurring issues found");
  });

  it("draws one svg node and one label per topology node", () => {
    const svg = renderTopologySvg(buildSystemViewModel(payload));
    for (const node of payload.topology!.nodes) {
      expect(svg).toContain(`data-node="${node.node_id}"`);
      expect(svg).toContain(`${node.node_id} (${node.step_count})`);
    }
    for (const edge of payload.topology!.edges) {
      expect(svg).toContain(`data-edge="${edge.from}-&gt;${edge.to}"`);
    }
  });
});
