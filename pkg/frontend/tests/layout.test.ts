import { describe, expect, it } from "vitest";

import { forceLayout } from "../src/layout.js";
import type { SystemPayload } from "../src/types.js";
import { fixture } from "./helpers.js";

const topology = fixture<SystemPayload>("system.json").topology!;

describe("force-directed layout", () => {
  it("is deterministic for a fixed seed", () => {
    const one = forceLayout(topology.nodes, topology.edges, 640, 400, 42);
    const two = forceLayout(topology.nodes, topology.edges, 640, 400, 42);
    expect([...one.entries()]).toEqual([...two.entries()]);
  });

  it("changes with the seed", () => {
    const one = forceLayout(topology.nodes, topology.edges, 640, 400, 42);
    const two = forceLayout(topology.nodes, topology.edges, 640, 400, 43);
    const moved = topology.nodes.some((n) => {
      const a = one.get(n.node_id)!;
      const b = two.get(n.node_id)!;
      return Math.abs(a.x - b.x) > 1 || Math.abs(a.y - b.y) > 1;
    });
    expect(moved).toBe(true);
  });

  it("places every node inside the viewport", () => {
    const positions = forceLayout(topology.nodes, topology.edges, 640, 400, 7);
    for (const node of topology.nodes) {
      const p = positions.get(node.node_id)!;
      expect(p.x).toBeGreaterThanOrEqual(0);
      expect(p.x).toBeLessThanOrEqual(640);
      expect(p.y).toBeGreaterThanOrEqual(0);
      expect(p.y).toBeLessThanOrEqual(400);
    }
  });

  it("separates connected nodes", () => {
    const positions = forceLayout(topology.nodes, topology.edges, 640, 400, 42);
    for (const edge of topology.edges) {
      if (edge.from === edge.to) continue;
      const a = positions.get(edge.from)!;
      const b = positions.get(edge.to)!;
      const distance = Math.hypot(a.x - b.x, a.y - b.y);
      expect(distance).toBeGreaterThan(10);
    }
  });
});
