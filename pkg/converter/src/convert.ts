import { checkExpectations, formatCheck } from "./expectations.js";
import { writeDataset } from "./neutral.js";
import { parseContentCites } from "./planetoid.js";
import { parsePubmed } from "./pubmed.js";
import { parseWikiCs } from "./wikics.js";
import { ConvertError, DATASET_IDS, DatasetId, EdgeTally, GraphData } from "./types.js";

export interface ConvertResult {
  graph: GraphData;
  tally: EdgeTally;
  log: string[];
}

export function convertDataset(id: string, src: string): ConvertResult {
  if (!DATASET_IDS.includes(id as DatasetId)) {
    throw new ConvertError(`unknown dataset id ${id}; expected one of ${DATASET_IDS.join(", ")}`);
  }
  const dataset = id as DatasetId;
  let graph: GraphData;
  let tally: EdgeTally;
  if (dataset === "cora" || dataset === "citeseer") {
    ({ graph, tally } = parseContentCites(src, dataset));
  } else if (dataset === "pubmed") {
    ({ graph, tally } = parsePubmed(src));
  } else {
    ({ graph, tally } = parseWikiCs(src));
  }
  const log = formatCheck(dataset, checkExpectations(dataset, graph, tally), tally);
  return { graph, tally, log };
}

export function convertAndWrite(id: string, src: string, dst: string): ConvertResult {
  const result = convertDataset(id, src);
  writeDataset(result.graph, dst);
  result.log.push(`${id}: wrote ${dst} (${result.graph.numNodes} nodes, ${result.graph.edges.length} edges)`);
  return result;
}
