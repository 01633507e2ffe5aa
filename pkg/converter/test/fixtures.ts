import * as fs from "node:fs";
import * as path from "node:path";

/** Deterministic LCG so fixtures are stable across runs. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

export interface ContentCitesSpec {
  ids: string[];
  classes: string[];
  numFeatures: number;
  /** raw citation lines as [cited, citing] id pairs (may repeat, self-cite, dangle) */
  cites: Array<[string, string]>;
  seed?: number;
}

/** Write a cora/citeseer-style <name>.content + <name>.cites fixture. */
export function writeContentCites(dir: string, name: string, spec: ContentCitesSpec): void {
  fs.mkdirSync(dir, { recursive: true });
  const rand = lcg(spec.seed ?? 1);
  const contentLines = spec.ids.map((id, i) => {
    const feats = Array.from({ length: spec.numFeatures }, () => (rand() < 0.08 ? "1" : "0"));
    const cls = spec.classes[i % spec.classes.length];
    return [id, ...feats, cls].join("\t");
  });
  fs.writeFileSync(path.join(dir, `${name}.content`), contentLines.join("\n") + "\n");
  const citeLines = spec.cites.map(([a, b]) => `${a}\t${b}`);
  fs.writeFileSync(path.join(dir, `${name}.cites`), citeLines.join("\n") + "\n");
}

export interface PubmedSpec {
  ids: string[];
  vocab: string[];
  labels: number[]; // 1-based, as in the source
  cites: Array<[string, string]>;
}

export function writePubmed(dir: string, spec: PubmedSpec): void {
  fs.mkdirSync(dir, { recursive: true });
  const rand = lcg(7);
  const schema = [
    "cat=label:label",
    ...spec.vocab.map((w) => `numeric:${w}:0.0`),
    "string:summary:summary",
  ].join("\t");
  const lines = ["PUBMED_DIABETES_NODES", schema];
  spec.ids.forEach((id, i) => {
    const kvs = [`label=${spec.labels[i]}`];
    for (const w of spec.vocab) {
      if (rand() < 0.4) {
        kvs.push(`${w}=${(rand() * 0.2).toFixed(4)}`);
      }
    }
    kvs.push(`summary=${w0(spec.vocab)}`);
    lines.push([id, ...kvs].join("\t"));
  });
  fs.writeFileSync(path.join(dir, "Pubmed-Diabetes.NODE.paper.tab"), lines.join("\n") + "\n");

  const citeLines = ["PUBMED_DIABETES_CITES", "NO\tpaper\t|\tpaper"];
  spec.cites.forEach(([a, b], k) => {
    citeLines.push(`${k}\tpaper:${a}\t|\tpaper:${b}`);
  });
  fs.writeFileSync(path.join(dir, "Pubmed-Diabetes.DIRECTED.cites.tab"), citeLines.join("\n") + "\n");
}

function w0(vocab: string[]): string {
  return vocab[0] ?? "w";
}

export interface WikiCsSpec {
  numNodes: number;
  numFeatures: number;
  numClasses: number;
  links: number[][];
  seed?: number;
}

export function writeWikiCs(dir: string, spec: WikiCsSpec): void {
  fs.mkdirSync(dir, { recursive: true });
  const rand = lcg(spec.seed ?? 3);
  const features = Array.from({ length: spec.numNodes }, () =>
    Array.from({ length: spec.numFeatures }, () => Math.round(rand() * 1000) / 1000));
  const labels = Array.from({ length: spec.numNodes }, (_, i) => i % spec.numClasses);
  const payload = { features, labels, links: spec.links };
  fs.writeFileSync(path.join(dir, "data.json"), JSON.stringify(payload));
}

/** A full-size Cora-shaped fixture (2708 nodes, 1433 features, 7 classes,
 * 5429 citation lines). Statistics match the published table; contents are
 * synthetic. */
export function writeCoraShaped(dir: string): void {
  const n = 2708;
  const ids = Array.from({ length: n }, (_, i) => `${100000 + i * 3}`);
  const classes = ["c0", "c1", "c2", "c3", "c4", "c5", "c6"];
  const rand = lcg(42);
  const cites: Array<[string, string]> = [];
  const seen = new Set<string>();
  while (cites.length < 5429) {
    const a = Math.floor(rand() * n);
    const b = Math.floor(rand() * n);
    if (a === b) {
      continue;
    }
    const key = `${Math.min(a, b)}-${Math.max(a, b)}`;
    if (seen.has(key)) {
      continue;
    }
    seen.add(key);
    cites.push([ids[a], ids[b]]);
  }
  writeContentCites(dir, "cora", { ids, classes, numFeatures: 1433, cites, seed: 11 });
}
