export interface GraphData {
  numNodes: number;
  numFeatures: number;
  numClasses: number;
  /** canonical undirected pairs, i < j, sorted, unique */
  edges: Array<[number, number]>;
  /** row-major numNodes x numFeatures */
  features: Float32Array;
  /** class id per node, -1 for unlabelled */
  labels: Int32Array;
}

export interface EdgeTally {
  /** raw directed pairs seen in the source (before any cleaning) */
  directed: number;
  /** self-loop pairs dropped */
  selfLoops: number;
  /** pairs referencing unknown node ids, dropped */
  dangling: number;
  /** unique undirected pairs kept */
  undirected: number;
}

export type DatasetId = "cora" | "citeseer" | "pubmed" | "wiki-cs";

export const DATASET_IDS: DatasetId[] = ["cora", "citeseer", "pubmed", "wiki-cs"];

export class ConvertError extends Error {}
