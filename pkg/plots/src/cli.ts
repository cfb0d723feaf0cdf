#!/usr/bin/env node
/**
 * plot --kind rate_vs_k --in results.csv --out fig1a
 *
 * Exit codes: 0 written, 1 plot/data error, 2 bad usage.
 */

import { KINDS, PlotKind, runJob } from "./plot.js";
import { PlotError } from "./csv.js";

const USAGE = `usage: plot --kind {${KINDS.join(",")}} --in <results.csv> --out <figure[.svg]>`;

export function main(argv: string[]): number {
  const opts = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i]!;
    if (a === "-h" || a === "--help") {
      console.log(USAGE);
      return 0;
    }
    if (!a.startsWith("--") || i + 1 >= argv.length) {
      console.error(USAGE);
      return 2;
    }
    opts.set(a.slice(2), argv[++i]!);
  }

  const kind = opts.get("kind");
  const input = opts.get("in");
  const output = opts.get("out");
  if (kind === undefined || input === undefined || output === undefined) {
    console.error(USAGE);
    return 2;
  }
  if (!(KINDS as readonly string[]).includes(kind)) {
    console.error(`error: unknown kind '${kind}' (expected one of ${KINDS.join(", ")})`);
    return 2;
  }

  try {
    const out = runJob({ kind: kind as PlotKind, input, output });
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof PlotError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    if (err instanceof Error && "code" in err && err.code === "ENOENT") {
      console.error(`error: cannot read ${input}`);
      return 1;
    }
    throw err;
  }
}

// argv[1] is this script when invoked as a bin; skip node and script path
if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
