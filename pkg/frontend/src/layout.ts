// Small force-directed layout with a seeded PRNG so snapshots are stable.

import type { TopologyEdge, TopologyNode } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

// mulberry32: tiny deterministic PRNG, good enough for layout jitter
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function forceLayout(
  nodes: TopologyNode[],
  edges: TopologyEdge[],
  width: number,
  height: number,
  seed = 42,
  iterations = 200,
): Map<string, Point> {
  const rand = mulberry32(seed);
  const positions = new Map<string, Point>();
  const ids = nodes.map((n) => n.node_id);
  for (const id of ids) {
    positions.set(id, {
      x: width * (0.2 + 0.6 * rand()),
      y: height * (0.2 + 0.6 * rand()),
    });
  }
  if (ids.length <= 1) return positions;

  const area = width * height;
  const k = Math.sqrt(area / ids.length) * 0.6;
  let temperature = width / 8;
  const links = edges
    .filter((e) => e.from !== e.to)
    .map((e) => [e.from, e.to] as const);

  for (let step = 0; step < iterations; step++) {
    const forces = new Map<string, Point>(ids.map((id) => [id, { x: 0, y: 0 }]));

    for (let i = 0; i < ids.length; i++) {
      for (let j = i + 1; j < ids.length; j++) {
        const a = positions.get(ids[i])!;
        const b = positions.get(ids[j])!;
        let dx = a.x - b.x;
        let dy = a.y - b.y;
        let distance = Math.sqrt(dx * dx + dy * dy);
        if (distance < 0.01) {
          // deterministic nudge for coincident nodes
          dx = 0.01 * (i - j);
          dy = 0.01;
          distance = Math.sqrt(dx * dx + dy * dy);
        }
        const repulsion = (k * k) / distance;
        const fa = forces.get(ids[i])!;
        const fb = forces.get(ids[j])!;
        fa.x += (dx / distance) * repulsion;
        fa.y += (dy / distance) * repulsion;
        fb.x -= (dx / distance) * repulsion;
        fb.y -= (dy / distance) * repulsion;
      }
    }

    for (const [from, to] of links) {
      const a = positions.get(from);
      const b = positions.get(to);
      if (!a || !b) continue;
      const dx = a.x - b.x;
      const dy = a.y - b.y;
      const distance = Math.max(Math.sqrt(dx * dx + dy * dy), 0.01);
      const attraction = (distance * distance) / k;
      const fa = forces.get(from)!;
      const fb = forces.get(to)!;
      fa.x -= (dx / distance) * attraction;
      fa.y -= (dy / distance) * attraction;
      fb.x += (dx / distance) * attraction;
      fb.y += (dy / distance) * attraction;
    }

    for (const id of ids) {
      const position = positions.get(id)!;
      const force = forces.get(id)!;
      const magnitude = Math.max(Math.sqrt(force.x * force.x + force.y * force.y), 0.01);
      const limited = Math.min(magnitude, temperature);
      position.x += (force.x / magnitude) * limited;
      position.y += (force.y / magnitude) * limited;
      position.x = Math.min(width - 40, Math.max(40, position.x));
      position.y = Math.min(height - 40, Math.max(40, position.y));
    }
    temperature *= 0.97;
  }
  return positions;
}
