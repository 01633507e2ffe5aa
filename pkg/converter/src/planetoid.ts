import * as fs from "node:fs";
import * as path from "node:path";

import { canonicalizeEdges } from "./edges.js";
import { ConvertError, EdgeTally, GraphData } from "./types.js";

/**
 * Parser for the original Cora/CiteSeer text distribution:
 *
 *   <name>.content   one line per paper: <id> <f_0> ... <f_{M-1}> <class>
 *   <name>.cites     one line per citation: <cited> <citing>
 *
 * Node order follows the .content file. Class names map to ids in sorted
 * order. Citations referencing unknown paper ids are dropped (CiteSeer has
 * a few dozen of these) and counted in the tally.
 */
export function parseContentCites(
  src: string,
  name: string,
): { graph: GraphData; tally: EdgeTally } {
  const contentPath = path.join(src, `${name}.content`);
  const citesPath = path.join(src, `${name}.cites`);
  for (const p of [contentPath, citesPath]) {
    if (!fs.existsSync(p)) {
      throw new ConvertError(`missing file: ${p}`);
    }
  }

  const contentLines = readLines(contentPath);
  if (contentLines.length === 0) {
    throw new ConvertError(`${contentPath} is empty`);
  }
  const numNodes = contentLines.length;
  const numFeatures = contentLines[0].split(/\s+/).length - 2;
  if (numFeatures < 1) {
    throw new ConvertError(`${contentPath}: expected <id> <features...> <label> rows`);
  }

  const idToIndex = new Map<string, number>();
  const classNames: string[] = [];
  const labelNameOf: string[] = new Array(numNodes);
  const features = new Float32Array(numNodes * numFeatures);

  contentLines.forEach((line, row) => {
    const parts = line.split(/\s+/);
    if (parts.length !== numFeatures + 2) {
      throw new ConvertError(
        `${contentPath}:${row + 1}: ${parts.length} fields, expected ${numFeatures + 2}`,
      );
    }
    const id = parts[0];
    if (idToIndex.has(id)) {
      throw new ConvertError(`${contentPath}: duplicate paper id ${id}`);
    }
    idToIndex.set(id, row);
    for (let k = 0; k < numFeatures; k++) {
      features[row * numFeatures + k] = Number(parts[k + 1]);
    }
    const cls = parts[numFeatures + 1];
    labelNameOf[row] = cls;
    if (!classNames.includes(cls)) {
      classNames.push(cls);
    }
  });

  classNames.sort();
  const labels = Int32Array.from(labelNameOf, (cls) => classNames.indexOf(cls));

  const rawPairs: Array<[number, number]> = [];
  for (const line of readLines(citesPath)) {
    const [a, b] = line.split(/\s+/);
    const ia = idToIndex.get(a);
    const ib = idToIndex.get(b);
    rawPairs.push([ia === undefined ? -1 : ia, ib === undefined ? -1 : ib]);
  }
  const { edges, tally } = canonicalizeEdges(rawPairs, numNodes);

  return {
    graph: {
      numNodes,
      numFeatures,
      numClasses: classNames.length,
      edges,
      features,
      labels,
    },
    tally,
  };
}

export function readLines(file: string): string[] {
  return fs
    .readFileSync(file, "utf-8")
    .split("\n")
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
}
