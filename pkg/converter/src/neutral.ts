import * as fs from "node:fs";
import * as path from "node:path";

import { ConvertError, GraphData } from "./types.js";

/**
 * Write a graph into the neutral dataset directory:
 * meta.json, features.bin (row-major float32 LE), edges.csv ("i,j" with
 * i < j), labels.csv (one id per line, -1 for unlabelled).
 *
 * Output bytes are a pure function of the graph, so converting twice
 * yields identical files.
 */
export function writeDataset(graph: GraphData, dst: string): void {
  fs.mkdirSync(dst, { recursive: true });

  const meta = {
    format_version: 1,
    num_nodes: graph.numNodes,
    num_features: graph.numFeatures,
    num_classes: graph.numClasses,
    num_edges: graph.edges.length,
  };
  writeAtomic(path.join(dst, "meta.json"), JSON.stringify(meta) + "\n");

  const buf = Buffer.allocUnsafe(graph.features.length * 4);
  for (let i = 0; i < graph.features.length; i++) {
    buf.writeFloatLE(graph.features[i], i * 4);
  }
  writeAtomic(path.join(dst, "features.bin"), buf);

  const edgeLines = graph.edges.map(([i, j]) => `${i},${j}`).join("\n");
  writeAtomic(path.join(dst, "edges.csv"), edgeLines.length ? edgeLines + "\n" : "");

  writeAtomic(path.join(dst, "labels.csv"), Array.from(graph.labels).join("\n") + "\n");
}

function writeAtomic(file: string, data: string | Buffer): void {
  const tmp = file + ".tmp";
  fs.writeFileSync(tmp, data);
  fs.renameSync(tmp, file);
}

export interface StoredDataset {
  meta: {
    format_version: number;
    num_nodes: number;
    num_features: number;
    num_classes: number;
    num_edges: number;
  };
  features: Float32Array;
  edges: Array<[number, number]>;
  labels: Int32Array;
}

export function readDataset(dir: string): StoredDataset {
  const metaPath = path.join(dir, "meta.json");
  if (!fs.existsSync(metaPath)) {
    throw new ConvertError(`missing file: ${metaPath}`);
  }
  const meta = JSON.parse(fs.readFileSync(metaPath, "utf-8"));

  const featPath = path.join(dir, "features.bin");
  if (!fs.existsSync(featPath)) {
    throw new ConvertError(`missing file: ${featPath}`);
  }
  const raw = fs.readFileSync(featPath);
  const features = new Float32Array(raw.length / 4);
  for (let i = 0; i < features.length; i++) {
    features[i] = raw.readFloatLE(i * 4);
  }

  const edgeText = fs.readFileSync(path.join(dir, "edges.csv"), "utf-8").trim();
  const edges: Array<[number, number]> = edgeText.length
    ? edgeText.split("\n").map((line) => {
        const [i, j] = line.split(",").map(Number);
        return [i, j];
      })
    : [];

  const labelText = fs.readFileSync(path.join(dir, "labels.csv"), "utf-8").trim();
  const labels = Int32Array.from(labelText.split("\n").map(Number));

  return { meta, features, edges, labels };
}
