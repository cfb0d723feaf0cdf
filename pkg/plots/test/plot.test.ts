import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it, vi } from "vitest";

import { PlotError } from "../src/csv.js";
import { renderJob } from "../src/plot.js";
import { main } from "../src/cli.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const FIXTURE = join(HERE, "fixtures", "rate_sweep.csv");
const FIXTURE_TEXT = readFileSync(FIXTURE, "utf-8");

function count(svg: string, needle: RegExp): number {
  return (svg.match(needle) ?? []).length;
}

describe("rate_vs_k on the sweep fixture", () => {
  // the fixture is a real harness run: k in {20, 30, 40}, methods RAS and
  // RMS, one 2x2 layout, so the figure must carry exactly one marker per
  // (k, method) pair and one line per (method, layout) group
  it("draws one marker per k per method and one line per group", () => {
    const svg = renderJob("rate_vs_k", FIXTURE_TEXT);
    expect(count(svg, /class="mk"/g)).toBe(6);
    expect(count(svg, /class="ln"/g)).toBe(2);
    expect(svg).toContain(">RAS 2x2<");
    expect(svg).toContain(">RMS 2x2<");
    expect(svg).toContain(">k<");
  });

  it("is byte-identical on regeneration (files through the CLI)", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const log = vi.spyOn(console, "log").mockImplementation(() => {});
    try {
      expect(main(["--kind", "rate_vs_k", "--in", FIXTURE, "--out", join(dir, "a")])).toBe(0);
      expect(main(["--kind", "rate_vs_k", "--in", FIXTURE, "--out", join(dir, "b.svg")])).toBe(0);
      const a = readFileSync(join(dir, "a.svg"));
      const b = readFileSync(join(dir, "b.svg"));
      expect(a.equals(b)).toBe(true);
      expect(a.length).toBeGreaterThan(1000);
    } finally {
      log.mockRestore();
    }
  });

  it("renders identically from the same text", () => {
    expect(renderJob("rate_vs_k", FIXTURE_TEXT)).toBe(renderJob("rate_vs_k", FIXTURE_TEXT));
  });

  it("puts the rate on a log axis", () => {
    const svg = renderJob("rate_vs_k", FIXTURE_TEXT);
    // rho spans ~1e-13 .. ~2e-2 in the fixture, so decade labels must appear
    expect(svg).toMatch(/>1e-13</);
    expect(svg).toMatch(/>1e-2</);
  });
});

describe("grouping and failure modes", () => {
  const THREE_K = `method,k,N1,N2,rho,iters,status
RAS,10,1,2,0.01,3,ok
RAS,20,1,2,0.02,3,ok
RAS,30,1,2,0.03,3,ok
RAS,10,1,4,0.04,5,ok
RAS,20,1,4,0.05,5,ok
RAS,30,1,4,0.06,6,ok
`;

  it("one line per layout, three markers each, on a 3-k CSV", () => {
    const svg = renderJob("rate_vs_k", THREE_K);
    expect(count(svg, /class="ln"/g)).toBe(2);
    expect(count(svg, /class="mk"/g)).toBe(6);
    expect(svg).toContain(">RAS 1x2<");
    expect(svg).toContain(">RAS 1x4<");
  });

  it("names missing columns in the error", () => {
    const noRho = THREE_K.replace(",rho,", ",other,");
    expect(() => renderJob("rate_vs_k", noRho)).toThrowError(
      /missing column rho \(needed by rate_vs_k\)/
    );
  });

  it("fails loudly when a group has no usable rows", () => {
    const dead = `method,k,N1,N2,rho,status
RAS,20,2,2,0.01,ok
RMS,20,2,2,,no_convergence
RMS,30,2,2,,error
`;
    expect(() => renderJob("rate_vs_k", dead)).toThrowError(
      /group RMS 2x2 has no usable rows/
    );
  });

  it("fails loudly on a CSV with no data rows", () => {
    expect(() => renderJob("rate_vs_k", "method,k,N1,N2,rho,status\n")).toThrowError(PlotError);
  });

  it("refuses nonpositive values on the log axis", () => {
    const zero = `method,k,N1,N2,rho,status
RAS,20,1,2,0.0,ok
RAS,30,1,2,0.01,ok
`;
    expect(() => renderJob("rate_vs_k", zero)).toThrowError(/log-scale y axis/);
  });
});

describe("iters_vs_k", () => {
  it("reads iteration counts on a linear axis", () => {
    const svg = renderJob("iters_vs_k", FIXTURE_TEXT);
    expect(count(svg, /class="mk"/g)).toBe(6);
    expect(count(svg, /class="ln"/g)).toBe(2);
    expect(svg).toContain(">iterations<");
    expect(svg).not.toMatch(/>1e-\d+</); // no decade labels on a linear axis
  });
});

describe("residual_history", () => {
  it("draws an all-ones trace as a flat line", () => {
    const ones =
      "iter,rel_res\n" + [0, 1, 2, 3, 4].map((n) => `${n},1.0`).join("\n") + "\n";
    const svg = renderJob("residual_history", ones);
    const pts = svg.match(/class="ln"[^>]*points="([^"]*)"/)![1]!;
    const ys = new Set(pts.split(" ").map((p) => p.split(",")[1]));
    expect(ys.size).toBe(1); // every vertex at the same height
    expect(count(svg, /class="mk"/g)).toBe(5);
  });

  it("splits curves on the optional label column and sorts by iter", () => {
    const two = `iter,rel_res,label
2,1e-4,run A
0,1.0,run A
1,1e-2,run A
0,1.0,run B
1,1e-3,run B
`;
    const svg = renderJob("residual_history", two);
    expect(count(svg, /class="ln"/g)).toBe(2);
    expect(svg).toContain(">run A<");
    expect(svg).toContain(">run B<");
    const pts = svg.match(/class="ln"[^>]*points="([^"]*)"/)![1]!;
    const xs = pts.split(" ").map((p) => Number(p.split(",")[0]));
    expect(xs).toEqual([...xs].sort((a, b) => a - b));
  });

  it("rejects rows with blank iter or rel_res", () => {
    expect(() => renderJob("residual_history", "iter,rel_res\n0,\n")).toThrowError(
      /must have both iter and rel_res/
    );
  });
});

describe("cli", () => {
  function quiet<T>(fn: () => T): T {
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    const log = vi.spyOn(console, "log").mockImplementation(() => {});
    try {
      return fn();
    } finally {
      err.mockRestore();
      log.mockRestore();
    }
  }

  it("exits 2 on unknown kind or missing flags", () => {
    expect(quiet(() => main(["--kind", "pie", "--in", "x.csv", "--out", "y"]))).toBe(2);
    expect(quiet(() => main(["--kind", "rate_vs_k"]))).toBe(2);
    expect(quiet(() => main(["stray"]))).toBe(2);
  });

  it("exits 1 when the input file is unreadable", () => {
    expect(quiet(() => main(["--kind", "rate_vs_k", "--in", "/nope.csv", "--out", "/tmp/x"]))).toBe(1);
  });

  it("exits 1 with the column names on a schema mismatch", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "a,b\n1,2\n");
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    try {
      expect(main(["--kind", "rate_vs_k", "--in", bad, "--out", join(dir, "f")])).toBe(1);
      const msg = err.mock.calls.map((c) => c.join(" ")).join("\n");
      expect(msg).toContain("method");
      expect(msg).toContain("rho");
    } finally {
      err.mockRestore();
    }
  });

  it("exits 0 and reports the written path", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const log = vi.spyOn(console, "log").mockImplementation(() => {});
    try {
      expect(main(["--kind", "iters_vs_k", "--in", FIXTURE, "--out", join(dir, "fig")])).toBe(0);
      expect(log.mock.calls[0]![0]).toContain("fig.svg");
    } finally {
      log.mockRestore();
    }
  });
});
