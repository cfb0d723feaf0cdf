import { describe, expect, it } from "vitest";

import { PlotError, numericCell, parseCsv, requireColumns } from "../src/csv.js";

const SAMPLE = `# run.k = 20, 30
# layout.n = 2x2
method,k,iters
RAS,20.0,8

RMS,20.0,2
`;

describe("parseCsv", () => {
  it("keeps comments verbatim and keys rows by header", () => {
    const t = parseCsv(SAMPLE);
    expect(t.comments).toEqual(["# run.k = 20, 30", "# layout.n = 2x2"]);
    expect(t.header).toEqual(["method", "k", "iters"]);
    expect(t.rows).toHaveLength(2);
    expect(t.rows[1]).toEqual({ method: "RMS", k: "20.0", iters: "2" });
  });

  it("rejects ragged rows with the line number", () => {
    expect(() => parseCsv("a,b\n1,2,3\n", "bad.csv")).toThrowError(
      /bad\.csv: line 2 has 3 fields, header has 2/
    );
  });

  it("rejects input with no header", () => {
    expect(() => parseCsv("# only comments\n")).toThrowError(PlotError);
  });
});

describe("requireColumns", () => {
  it("names every missing column and the consumer", () => {
    const t = parseCsv("method,k\nRAS,20\n");
    expect(() => requireColumns(t, ["method", "rho", "status"], "rate_vs_k")).toThrowError(
      /missing columns rho, status \(needed by rate_vs_k\)/
    );
  });

  it("passes when all columns exist", () => {
    const t = parseCsv("method,k\nRAS,20\n");
    expect(() => requireColumns(t, ["method", "k"], "x")).not.toThrow();
  });
});

describe("numericCell", () => {
  it("parses numbers, returns null for blanks, throws on garbage", () => {
    const t = parseCsv("a,b,c\n1.5,,zzz\n");
    const row = t.rows[0]!;
    expect(numericCell(row, "a")).toBe(1.5);
    expect(numericCell(row, "b")).toBeNull();
    expect(() => numericCell(row, "c")).toThrowError(/column c: not a number: 'zzz'/);
  });
});
