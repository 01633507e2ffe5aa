import * as fs from "node:fs";
import * as path from "node:path";

import { canonicalizeEdges } from "./edges.js";
import { readLines } from "./planetoid.js";
import { ConvertError, EdgeTally, GraphData } from "./types.js";

const NODE_FILE = "Pubmed-Diabetes.NODE.paper.tab";
const CITES_FILE = "Pubmed-Diabetes.DIRECTED.cites.tab";

/**
 * Parser for the PubMed diabetes distribution.
 *
 * NODE.paper.tab: one header line, then an attribute-schema line whose
 * tab-separated entries look like "cat=label:label", "numeric:w-xxx:0.0"
 * (one per vocabulary word, in order) and "string:summary:summary".
 * Data lines: <paper_id>\tlabel=<1..3>\t<word>=<tfidf>...\tsummary=...
 *
 * DIRECTED.cites.tab: two header lines, then
 * <edge_id>\tpaper:<id>\t|\tpaper:<id> per citation.
 */
export function parsePubmed(src: string): { graph: GraphData; tally: EdgeTally } {
  const nodePath = path.join(src, NODE_FILE);
  const citesPath = path.join(src, CITES_FILE);
  for (const p of [nodePath, citesPath]) {
    if (!fs.existsSync(p)) {
      throw new ConvertError(`missing file: ${p}`);
    }
  }

  const nodeLines = readLines(nodePath);
  if (nodeLines.length < 3) {
    throw new ConvertError(`${nodePath}: too short to contain header + schema + data`);
  }
  const vocab: string[] = [];
  for (const token of nodeLines[1].split("\t")) {
    const m = token.match(/^numeric:([^:]+):/);
    if (m) {
      vocab.push(m[1]);
    }
  }
  if (vocab.length === 0) {
    throw new ConvertError(`${nodePath}: no numeric attributes in the schema line`);
  }
  const wordIndex = new Map(vocab.map((w, i) => [w, i]));

  const dataLines = nodeLines.slice(2);
  const numNodes = dataLines.length;
  const numFeatures = vocab.length;
  const features = new Float32Array(numNodes * numFeatures);
  const labels = new Int32Array(numNodes).fill(-1);
  const idToIndex = new Map<string, number>();

  dataLines.forEach((line, row) => {
    const parts = line.split("\t");
    const id = parts[0];
    if (idToIndex.has(id)) {
      throw new ConvertError(`${nodePath}: duplicate paper id ${id}`);
    }
    idToIndex.set(id, row);
    for (const kv of parts.slice(1)) {
      const eq = kv.indexOf("=");
      if (eq < 0) {
        continue;
      }
      const key = kv.slice(0, eq);
      const value = kv.slice(eq + 1);
      if (key === "label") {
        labels[row] = Number(value) - 1; // source labels are 1-based
      } else {
        const col = wordIndex.get(key);
        if (col !== undefined) {
          features[row * numFeatures + col] = Number(value);
        }
      }
    }
    if (labels[row] < 0) {
      throw new ConvertError(`${nodePath}: node ${id} has no label field`);
    }
  });

  const rawPairs: Array<[number, number]> = [];
  for (const line of readLines(citesPath).slice(2)) {
    const m = line.match(/paper:(\S+)\s*\|\s*paper:(\S+)/);
    if (!m) {
      continue;
    }
    const ia = idToIndex.get(m[1]);
    const ib = idToIndex.get(m[2]);
    rawPairs.push([ia === undefined ? -1 : ia, ib === undefined ? -1 : ib]);
  }
  const { edges, tally } = canonicalizeEdges(rawPairs, numNodes);

  const numClasses = Math.max(...labels) + 1;
  return {
    graph: { numNodes, numFeatures, numClasses, edges, features, labels },
    tally,
  };
}
