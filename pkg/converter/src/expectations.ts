import { DatasetId, EdgeTally, GraphData } from "./types.js";

/** Published statistics for the supported datasets. The edge counts are the
 * source distributions' raw tallies; actual unique undirected counts can
 * differ (reverse duplicates, self-citations), which is logged, not fatal. */
export const EXPECTED: Record<DatasetId, { nodes: number; edges: number; classes: number; features: number }> = {
  cora: { nodes: 2708, edges: 5429, classes: 7, features: 1433 },
  citeseer: { nodes: 3327, edges: 4732, classes: 6, features: 3703 },
  pubmed: { nodes: 19717, edges: 44338, classes: 3, features: 500 },
  "wiki-cs": { nodes: 11701, edges: 216123, classes: 10, features: 300 },
};

export interface CheckLine {
  field: string;
  actual: number;
  expected: number;
  ok: boolean;
}

export function checkExpectations(
  id: DatasetId,
  graph: GraphData,
  tally: EdgeTally,
): CheckLine[] {
  const exp = EXPECTED[id];
  const lines: CheckLine[] = [
    { field: "nodes", actual: graph.numNodes, expected: exp.nodes, ok: graph.numNodes === exp.nodes },
    { field: "features", actual: graph.numFeatures, expected: exp.features, ok: graph.numFeatures === exp.features },
    { field: "classes", actual: graph.numClasses, expected: exp.classes, ok: graph.numClasses === exp.classes },
  ];
  // the published edge number may match either convention
  const ok = tally.directed === exp.edges || tally.undirected === exp.edges;
  lines.push({ field: "edges", actual: tally.undirected, expected: exp.edges, ok });
  return lines;
}

export function formatCheck(id: DatasetId, lines: CheckLine[], tally: EdgeTally): string[] {
  const out: string[] = [];
  for (const line of lines) {
    if (line.ok) {
      out.push(`${id}: ${line.field} ${line.actual} matches expected ${line.expected}`);
    } else if (line.field === "edges") {
      out.push(
        `${id}: edge-count discrepancy vs expected ${line.expected}: ` +
          `directed tally ${tally.directed}, undirected unique ${tally.undirected} ` +
          `(self-loops dropped ${tally.selfLoops}, dangling dropped ${tally.dangling}); ` +
          `continuing with actual counts`,
      );
    } else {
      out.push(
        `${id}: ${line.field} ${line.actual} differs from expected ${line.expected}; ` +
          `continuing with actual counts`,
      );
    }
  }
  out.push(
    `${id}: edge tallies: directed ${tally.directed}, undirected unique ${tally.undirected}, ` +
      `self-loops ${tally.selfLoops}, dangling ${tally.dangling}`,
  );
  return out;
}
