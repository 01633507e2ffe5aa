import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { convertAndWrite } from "../src/convert.js";
import { main as cliMain } from "../src/cli.js";
import { writeContentCites, writePubmed, writeWikiCs } from "./fixtures.js";

const tmpRoot = fs.mkdtempSync(path.join(os.tmpdir(), "roundtrip-test-"));

afterAll(() => {
  fs.rmSync(tmpRoot, { recursive: true, force: true });
});

/** The training package must accept every converted dataset; its CLI loads
 * the graph (validating all invariants) before writing splits.json. */
function loaderAccepts(dir: string): boolean {
  try {
    execFileSync("python3", [
      "-m", "sharpgcl.cli", "prepare-splits",
      "--data", dir, "--train-frac", "0.6", "--val-frac", "0.2", "--seed", "0",
    ], { stdio: "pipe" });
    return fs.existsSync(path.join(dir, "splits.json"));
  } catch {
    return false;
  }
}

function convertFixture(name: string): string {
  const src = path.join(tmpRoot, `${name}-src`);
  const dst = path.join(tmpRoot, `${name}-dst`);
  if (name === "cora" || name === "citeseer") {
    writeContentCites(src, name, {
      ids: Array.from({ length: 30 }, (_, i) => `paper${i}`),
      classes: ["m", "n", "o"],
      numFeatures: 16,
      cites: Array.from({ length: 60 }, (_, k): [string, string] =>
        [`paper${k % 30}`, `paper${(k * 7 + 3) % 30}`]),
    });
  } else if (name === "pubmed") {
    writePubmed(src, {
      ids: Array.from({ length: 25 }, (_, i) => `${2000 + i}`),
      vocab: Array.from({ length: 12 }, (_, i) => `w-term${i}`),
      labels: Array.from({ length: 25 }, (_, i) => (i % 3) + 1),
      cites: Array.from({ length: 40 }, (_, k): [string, string] =>
        [`${2000 + (k % 25)}`, `${2000 + ((k * 3 + 1) % 25)}`]),
    });
  } else {
    writeWikiCs(src, {
      numNodes: 20,
      numFeatures: 8,
      numClasses: 4,
      links: Array.from({ length: 20 }, (_, i) => [(i + 1) % 20, (i + 5) % 20]),
    });
  }
  convertAndWrite(name, src, dst);
  return dst;
}

describe("loader round trip", () => {
  for (const name of ["cora", "citeseer", "pubmed", "wiki-cs"]) {
    it(`primary package loads a converted ${name} dataset`, () => {
      const dst = convertFixture(name);
      expect(loaderAccepts(dst)).toBe(true);
    }, 60_000);
  }
});

describe("cli", () => {
  it("convert + verify succeed end to end", () => {
    const src = path.join(tmpRoot, "cli-src");
    writeContentCites(src, "cora", {
      ids: ["a", "b", "c"],
      classes: ["x", "y"],
      numFeatures: 4,
      cites: [["a", "b"], ["b", "c"]],
    });
    const dst = path.join(tmpRoot, "cli-dst");
    expect(cliMain(["convert", "--dataset", "cora", "--src", src, "--dst", dst])).toBe(0);
    expect(cliMain(["verify", "--dir", dst])).toBe(0);
  });

  it("verify exits nonzero on a corrupted dataset", () => {
    const src = path.join(tmpRoot, "cli-bad-src");
    writeContentCites(src, "cora", {
      ids: ["a", "b"],
      classes: ["x", "y"],
      numFeatures: 4,
      cites: [["a", "b"]],
    });
    const dst = path.join(tmpRoot, "cli-bad-dst");
    expect(cliMain(["convert", "--dataset", "cora", "--src", src, "--dst", dst])).toBe(0);
    fs.writeFileSync(path.join(dst, "labels.csv"), "9\n9\n");
    expect(cliMain(["verify", "--dir", dst])).toBe(1);
  });

  it("reports usage errors", () => {
    expect(cliMain(["convert", "--dataset", "cora"])).toBe(1);
    expect(cliMain(["frobnicate"])).toBe(1);
  });
});
