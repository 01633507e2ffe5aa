import { readDataset } from "./neutral.js";
import { ConvertError } from "./types.js";

export interface VerifyLine {
  field: string;
  ok: boolean;
  detail: string;
}

export interface VerifyReport {
  lines: VerifyLine[];
  ok: boolean;
  /** node-degree histogram, index = degree */
  degreeHistogram: number[];
}

/**
 * Re-derive every count from the stored files and compare with meta.json.
 */
export function verifyDataset(dir: string): VerifyReport {
  const { meta, features, edges, labels } = readDataset(dir);
  const lines: VerifyLine[] = [];
  const push = (field: string, ok: boolean, detail: string) =>
    lines.push({ field, ok, detail });

  push(
    "format_version",
    meta.format_version === 1,
    `declared ${meta.format_version}`,
  );

  const n = meta.num_nodes;
  const m = meta.num_features;
  push(
    "features",
    features.length === n * m,
    `features.bin holds ${features.length} values, meta declares ${n}*${m}`,
  );
  const finite = features.every((v) => Number.isFinite(v));
  push("features_finite", finite, finite ? "all finite" : "non-finite value present");

  push(
    "labels",
    labels.length === n,
    `labels.csv has ${labels.length} rows, meta declares ${n}`,
  );
  const badLabel = Array.from(labels).find(
    (v) => v !== -1 && (v < 0 || v >= meta.num_classes),
  );
  push(
    "label_range",
    badLabel === undefined,
    badLabel === undefined
      ? `all labels in [0, ${meta.num_classes}) or -1`
      : `label out of range: ${badLabel}`,
  );

  push(
    "edge_count",
    edges.length === meta.num_edges,
    `edges.csv has ${edges.length} pairs, meta declares ${meta.num_edges}`,
  );
  let canonical = true;
  const seen = new Set<number>();
  const degree = new Array<number>(n).fill(0);
  for (const [i, j] of edges) {
    if (!(Number.isInteger(i) && Number.isInteger(j)) || i < 0 || j >= n || i >= j) {
      canonical = false;
      break;
    }
    const key = i * n + j;
    if (seen.has(key)) {
      canonical = false;
      break;
    }
    seen.add(key);
    degree[i] += 1;
    degree[j] += 1;
  }
  push(
    "edge_canonical",
    canonical,
    canonical ? "all pairs unique with i < j in range" : "non-canonical edge found",
  );

  const degSum = degree.reduce((a, b) => a + b, 0);
  push(
    "degree_sum",
    degSum === 2 * edges.length,
    `sum of degrees ${degSum} vs 2|E| = ${2 * edges.length}`,
  );

  const maxDeg = degree.length ? Math.max(...degree, 0) : 0;
  const histogram = new Array<number>(maxDeg + 1).fill(0);
  for (const d of degree) {
    histogram[d] += 1;
  }

  return { lines, ok: lines.every((l) => l.ok), degreeHistogram: histogram };
}

export function formatVerify(report: VerifyReport): string[] {
  const out = report.lines.map(
    (l) => `${l.ok ? "PASS" : "FAIL"} ${l.field}: ${l.detail}`,
  );
  const histo = report.degreeHistogram
    .map((count, deg) => (count ? `${deg}:${count}` : null))
    .filter((s) => s !== null)
    .slice(0, 20)
    .join(" ");
  out.push(`degree histogram (deg:count) ${histo}`);
  return out;
}

export { ConvertError };
