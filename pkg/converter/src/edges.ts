import { EdgeTally } from "./types.js";

/**
 * Canonicalize raw (possibly directed, duplicated, self-looped, dangling)
 * index pairs: keep each undirected pair once as [min, max], sorted.
 * Pairs with an endpoint outside [0, numNodes) count as dangling.
 */
export function canonicalizeEdges(
  raw: Array<[number, number]>,
  numNodes: number,
): { edges: Array<[number, number]>; tally: EdgeTally } {
  const seen = new Set<number>();
  let selfLoops = 0;
  let dangling = 0;
  for (const [a, b] of raw) {
    if (a < 0 || b < 0 || a >= numNodes || b >= numNodes) {
      dangling += 1;
      continue;
    }
    if (a === b) {
      selfLoops += 1;
      continue;
    }
    const lo = Math.min(a, b);
    const hi = Math.max(a, b);
    seen.add(lo * numNodes + hi);
  }
  const packed = Array.from(seen).sort((x, y) => x - y);
  const edges = packed.map((p): [number, number] => [
    Math.floor(p / numNodes),
    p % numNodes,
  ]);
  return {
    edges,
    tally: {
      directed: raw.length,
      selfLoops,
      dangling,
      undirected: edges.length,
    },
  };
}
