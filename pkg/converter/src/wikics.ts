import * as fs from "node:fs";
import * as path from "node:path";

import { canonicalizeEdges } from "./edges.js";
import { ConvertError, EdgeTally, GraphData } from "./types.js";

/**
 * Parser for the Wiki-CS distribution's data.json:
 * {"features": number[][], "labels": number[], "links": number[][]}
 * where links[i] lists the out-neighbors of node i (directed adjacency
 * lists; the neutral format stores each pair once, undirected).
 */
export function parseWikiCs(src: string): { graph: GraphData; tally: EdgeTally } {
  const file = fs.statSync(src, { throwIfNoEntry: false })?.isDirectory()
    ? path.join(src, "data.json")
    : src;
  if (!fs.existsSync(file)) {
    throw new ConvertError(`missing file: ${file}`);
  }
  const payload = JSON.parse(fs.readFileSync(file, "utf-8"));
  for (const key of ["features", "labels", "links"]) {
    if (!(key in payload)) {
      throw new ConvertError(`${file}: missing key ${key}`);
    }
  }
  const rows: number[][] = payload.features;
  const labelList: number[] = payload.labels;
  const links: number[][] = payload.links;

  const numNodes = rows.length;
  if (labelList.length !== numNodes || links.length !== numNodes) {
    throw new ConvertError(
      `${file}: features/labels/links disagree on node count ` +
        `(${numNodes}/${labelList.length}/${links.length})`,
    );
  }
  const numFeatures = rows[0].length;
  const features = new Float32Array(numNodes * numFeatures);
  rows.forEach((row, i) => {
    if (row.length !== numFeatures) {
      throw new ConvertError(`${file}: ragged feature row at node ${i}`);
    }
    for (let k = 0; k < numFeatures; k++) {
      features[i * numFeatures + k] = row[k];
    }
  });

  const rawPairs: Array<[number, number]> = [];
  links.forEach((nbrs, i) => {
    for (const j of nbrs) {
      rawPairs.push([i, j]);
    }
  });
  const { edges, tally } = canonicalizeEdges(rawPairs, numNodes);

  const labels = Int32Array.from(labelList);
  const numClasses = Math.max(...labelList) + 1;
  return {
    graph: { numNodes, numFeatures, numClasses, edges, features, labels },
    tally,
  };
}
