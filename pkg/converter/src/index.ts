export { canonicalizeEdges } from "./edges.js";
export { convertAndWrite, convertDataset } from "./convert.js";
export { EXPECTED, checkExpectations } from "./expectations.js";
export { readDataset, writeDataset } from "./neutral.js";
export { parseContentCites } from "./planetoid.js";
export { parsePubmed } from "./pubmed.js";
export { parseWikiCs } from "./wikics.js";
export { formatVerify, verifyDataset } from "./verify.js";
export * from "./types.js";
