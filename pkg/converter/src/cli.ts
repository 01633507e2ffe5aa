#!/usr/bin/env node
/**
 * Usage:
 *   converter convert --dataset <cora|citeseer|pubmed|wiki-cs> --src DIR --dst DIR
 *   converter verify --dir DIR
 */

import { convertAndWrite } from "./convert.js";
import { formatVerify, verifyDataset } from "./verify.js";
import { ConvertError } from "./types.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new ConvertError(`bad arguments near ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, key: string): string {
  const v = flags.get(key);
  if (!v) {
    throw new ConvertError(`missing --${key}`);
  }
  return v;
}

export function main(argv: string[]): number {
  try {
    const [command, ...rest] = argv;
    if (command === "convert") {
      const flags = parseFlags(rest);
      const result = convertAndWrite(
        need(flags, "dataset"),
        need(flags, "src"),
        need(flags, "dst"),
      );
      for (const line of result.log) {
        console.log(line);
      }
      return 0;
    }
    if (command === "verify") {
      const flags = parseFlags(rest);
      const report = verifyDataset(need(flags, "dir"));
      for (const line of formatVerify(report)) {
        console.log(line);
      }
      return report.ok ? 0 : 1;
    }
    console.error("usage: converter convert --dataset NAME --src DIR --dst DIR | verify --dir DIR");
    return 1;
  } catch (err) {
    if (err instanceof ConvertError || err instanceof Error) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

import { fileURLToPath } from "node:url";

if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(main(process.argv.slice(2)));
}
