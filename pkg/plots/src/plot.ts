/**
 * Figure kinds over the solver's result CSVs.
 *
 * rate_vs_k and iters_vs_k read the sweep table (one row per cell, columns
 * method, k, N1, N2, ..., iters, rho, status) and draw one line per
 * (method, N1xN2) group with a marker at every k.  residual_history reads a
 * per-iteration CSV with columns iter, rel_res and an optional label column
 * for several curves in one figure.
 *
 * The figures say only what the CSV says: nothing is recomputed, rows whose
 * status is not "ok" contribute no points, and a group that ends up with no
 * points at all is an error rather than an invisible line.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { CsvTable, PlotError, numericCell, parseCsv, requireColumns } from "./csv.js";
import { Series, renderChart } from "./chart.js";

export const KINDS = ["rate_vs_k", "residual_history", "iters_vs_k"] as const;
export type PlotKind = (typeof KINDS)[number];

export interface PlotJob {
  kind: PlotKind;
  input: string;
  output: string;
}

interface GroupedPoint {
  k: number;
  value: number | null;
}

/** Group table rows by (method, N1xN2); insertion order follows the CSV. */
function tableSeries(table: CsvTable, valueCol: string, kind: string): Series[] {
  requireColumns(table, ["method", "k", "N1", "N2", valueCol, "status"], kind);

  const groups = new Map<string, GroupedPoint[]>();
  for (const row of table.rows) {
    const label = `${row["method"]} ${row["N1"]}x${row["N2"]}`;
    const k = numericCell(row, "k");
    if (k === null) throw new PlotError("column k: empty value");
    const usable = row["status"] === "ok" ? numericCell(row, valueCol) : null;
    let pts = groups.get(label);
    if (pts === undefined) {
      pts = [];
      groups.set(label, pts);
    }
    pts.push({ k, value: usable });
  }

  const series: Series[] = [];
  for (const [label, pts] of groups) {
    const points = pts
      .filter((p) => p.value !== null)
      .map((p) => ({ x: p.k, y: p.value as number }))
      .sort((a, b) => a.x - b.x);
    if (points.length === 0) {
      throw new PlotError(
        `group ${label} has no usable rows (every cell failed or lacks ${valueCol})`
      );
    }
    series.push({ label, points });
  }
  if (series.length === 0) throw new PlotError(`no data rows (needed by ${kind})`);
  return series;
}

function historySeries(table: CsvTable): Series[] {
  requireColumns(table, ["iter", "rel_res"], "residual_history");
  const hasLabel = table.header.includes("label");

  const groups = new Map<string, { x: number; y: number }[]>();
  for (const row of table.rows) {
    const label = hasLabel ? (row["label"] ?? "run") : "run";
    const iter = numericCell(row, "iter");
    const res = numericCell(row, "rel_res");
    if (iter === null || res === null) {
      throw new PlotError("residual_history rows must have both iter and rel_res");
    }
    let pts = groups.get(label);
    if (pts === undefined) {
      pts = [];
      groups.set(label, pts);
    }
    pts.push({ x: iter, y: res });
  }

  const series: Series[] = [];
  for (const [label, points] of groups) {
    points.sort((a, b) => a.x - b.x);
    series.push({ label, points });
  }
  if (series.length === 0) throw new PlotError("no data rows (needed by residual_history)");
  return series;
}

/** Render a job to SVG text without touching the filesystem. */
export function renderJob(kind: PlotKind, csvText: string, name = "input"): string {
  const table = parseCsv(csvText, name);
  switch (kind) {
    case "rate_vs_k":
      return renderChart({
        title: "residual reduction rate vs wavenumber",
        xLabel: "k",
        yLabel: "rate at the designated iteration",
        logY: true,
        series: tableSeries(table, "rho", "rate_vs_k"),
      });
    case "iters_vs_k":
      return renderChart({
        title: "iterations to tolerance vs wavenumber",
        xLabel: "k",
        yLabel: "iterations",
        logY: false,
        series: tableSeries(table, "iters", "iters_vs_k"),
      });
    case "residual_history":
      return renderChart({
        title: "relative residual per iteration",
        xLabel: "iteration",
        yLabel: "relative residual",
        logY: true,
        series: historySeries(table),
      });
  }
}

/** Read the job's CSV, render, and write the SVG; returns the output path. */
export function runJob(job: PlotJob): string {
  const text = readFileSync(job.input, "utf-8");
  const svg = renderJob(job.kind, text, job.input);
  const out = job.output.endsWith(".svg") ? job.output : job.output + ".svg";
  writeFileSync(out, svg);
  return out;
}
