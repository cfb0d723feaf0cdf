/**
 * Deterministic SVG line charts.
 *
 * Everything that reaches the output string is derived from the input data
 * and fixed style constants; there are no timestamps, no randomness, and
 * coordinates are rounded to a fixed precision, so rendering the same data
 * twice yields byte-identical files.
 */

import { PlotError } from "./csv.js";

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  logY: boolean;
  series: Series[];
}

// canvas, fixed
const W = 640;
const H = 400;
const ML = 70;
const MR = 18;
const MT = 42;
const MB = 52;
const PW = W - ML - MR;
const PH = H - MT - MB;

const PALETTE = ["#1b6ca8", "#c2432f", "#2d6a4f", "#9d4edd", "#b8860b", "#444444"];
const MARKERS = ["circle", "square", "diamond", "triangle"] as const;
const MARKER_R = 4;

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function fmt(v: number): string {
  return v.toFixed(2);
}

/** Tick positions at 1/2/5 steps covering [min, max]. */
export function linearTicks(min: number, max: number, count = 6): number[] {
  const range = max - min || Math.abs(max) || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough)!;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Decade positions covering [min, max], both positive. */
export function decadeTicks(min: number, max: number): number[] {
  let lo = Math.floor(Math.log10(min));
  let hi = Math.ceil(Math.log10(max));
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const ticks: number[] = [];
  for (let e = lo; e <= hi; e++) ticks.push(e);
  return ticks; // exponents, not values
}

function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("+", "");
  return String(Math.round(v * 1e6) / 1e6);
}

function markerElement(
  kind: (typeof MARKERS)[number],
  cx: number,
  cy: number,
  color: string,
  cls = "mk"
): string {
  const r = MARKER_R;
  const x = fmt(cx);
  const y = fmt(cy);
  const at = cls === "" ? "" : ` class="${cls}"`;
  switch (kind) {
    case "circle":
      return `<circle${at} cx="${x}" cy="${y}" r="${r}" fill="${color}"/>`;
    case "square":
      return `<rect${at} x="${fmt(cx - r)}" y="${fmt(cy - r)}" width="${2 * r}" height="${2 * r}" fill="${color}"/>`;
    case "diamond":
      return `<path${at} d="M ${x} ${fmt(cy - r - 1)} L ${fmt(cx + r + 1)} ${y} L ${x} ${fmt(cy + r + 1)} L ${fmt(cx - r - 1)} ${y} Z" fill="${color}"/>`;
    case "triangle":
      return `<path${at} d="M ${x} ${fmt(cy - r - 1)} L ${fmt(cx + r + 1)} ${fmt(cy + r)} L ${fmt(cx - r - 1)} ${fmt(cy + r)} Z" fill="${color}"/>`;
  }
}

export function renderChart(spec: ChartSpec): string {
  if (spec.series.length === 0) throw new PlotError("nothing to plot: no series");
  for (const s of spec.series) {
    if (s.points.length === 0) throw new PlotError(`series '${s.label}' has no points`);
  }

  const xs = spec.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = spec.series.flatMap((s) => s.points.map((p) => p.y));
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);

  if (spec.logY) {
    const bad = spec.series.flatMap((s) => s.points.filter((p) => p.y <= 0));
    if (bad.length > 0) {
      throw new PlotError(`log-scale y axis cannot show value ${bad[0]!.y}`);
    }
  }

  // pad the ranges so markers stay inside the frame
  const xPad = (xMax - xMin || Math.abs(xMax) || 1) * 0.06;
  const xLo = xMin - xPad;
  const xHi = xMax + xPad;
  let yTicksExp: number[] = [];
  let yTicksLin: number[] = [];
  let yOf: (v: number) => number;
  if (spec.logY) {
    yTicksExp = decadeTicks(yMin, yMax);
    const lo = yTicksExp[0]!;
    const hi = yTicksExp[yTicksExp.length - 1]!;
    yOf = (v) => MT + PH - ((Math.log10(v) - lo) / (hi - lo)) * PH;
  } else {
    const pad = (yMax - yMin || Math.abs(yMax) || 1) * 0.08;
    yMin = yMin - pad >= 0 || yMin < 0 ? yMin - pad : 0;
    yMax = yMax + pad;
    yTicksLin = linearTicks(yMin, yMax);
    yOf = (v) => MT + PH - ((v - yMin) / (yMax - yMin)) * PH;
  }
  const xOf = (v: number) => ML + ((v - xLo) / (xHi - xLo)) * PW;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">`
  );
  parts.push(`<rect width="${W}" height="${H}" fill="#ffffff"/>`);
  parts.push(`<text x="${ML}" y="${MT - 18}" font-size="13" font-weight="600" fill="#222">${esc(spec.title)}</text>`);

  // grid + y ticks
  if (spec.logY) {
    for (const e of yTicksExp) {
      const y = yOf(Math.pow(10, e));
      parts.push(`<line x1="${ML}" y1="${fmt(y)}" x2="${ML + PW}" y2="${fmt(y)}" stroke="#e5e5e5" stroke-width="0.6"/>`);
      parts.push(
        `<text x="${ML - 7}" y="${fmt(y + 3.5)}" text-anchor="end" font-size="10" fill="#555">1e${e}</text>`
      );
    }
  } else {
    for (const v of yTicksLin) {
      const y = yOf(v);
      parts.push(`<line x1="${ML}" y1="${fmt(y)}" x2="${ML + PW}" y2="${fmt(y)}" stroke="#e5e5e5" stroke-width="0.6"/>`);
      parts.push(
        `<text x="${ML - 7}" y="${fmt(y + 3.5)}" text-anchor="end" font-size="10" fill="#555">${esc(tickLabel(v))}</text>`
      );
    }
  }

  // x ticks at the data's distinct positions when few, else nice ticks
  const distinctX = [...new Set(xs)].sort((a, b) => a - b);
  const xTicks = distinctX.length <= 10 ? distinctX : linearTicks(xMin, xMax, 8);
  for (const v of xTicks) {
    const x = xOf(v);
    parts.push(`<line x1="${fmt(x)}" y1="${MT + PH}" x2="${fmt(x)}" y2="${MT + PH + 4}" stroke="#333" stroke-width="0.7"/>`);
    parts.push(
      `<text x="${fmt(x)}" y="${MT + PH + 17}" text-anchor="middle" font-size="10" fill="#555">${esc(tickLabel(v))}</text>`
    );
  }

  // frame
  parts.push(`<line x1="${ML}" y1="${MT}" x2="${ML}" y2="${MT + PH}" stroke="#333" stroke-width="0.8"/>`);
  parts.push(`<line x1="${ML}" y1="${MT + PH}" x2="${ML + PW}" y2="${MT + PH}" stroke="#333" stroke-width="0.8"/>`);

  // axis labels
  parts.push(
    `<text x="${ML + PW / 2}" y="${H - 14}" text-anchor="middle" font-size="11" fill="#333">${esc(spec.xLabel)}</text>`
  );
  parts.push(
    `<text x="18" y="${MT + PH / 2}" text-anchor="middle" font-size="11" fill="#333" transform="rotate(-90,18,${MT + PH / 2})">${esc(spec.yLabel)}</text>`
  );

  // series: line then markers, in input order
  spec.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const marker = MARKERS[i % MARKERS.length]!;
    const pts = s.points.map((p) => `${fmt(xOf(p.x))},${fmt(yOf(p.y))}`).join(" ");
    parts.push(`<polyline class="ln" fill="none" stroke="${color}" stroke-width="1.4" points="${pts}"/>`);
    for (const p of s.points) parts.push(markerElement(marker, xOf(p.x), yOf(p.y), color));
  });

  // legend, top right inside the frame
  const legendW = Math.max(...spec.series.map((s) => s.label.length)) * 6.4 + 34;
  const legendX = ML + PW - legendW - 6;
  let ly = MT + 8;
  parts.push(
    `<rect x="${fmt(legendX)}" y="${fmt(ly - 4)}" width="${fmt(legendW)}" height="${spec.series.length * 15 + 6}" fill="#ffffff" fill-opacity="0.9" stroke="#ccc" stroke-width="0.5"/>`
  );
  spec.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const marker = MARKERS[i % MARKERS.length]!;
    parts.push(`<line x1="${fmt(legendX + 5)}" y1="${fmt(ly + 5)}" x2="${fmt(legendX + 23)}" y2="${fmt(ly + 5)}" stroke="${color}" stroke-width="1.4"/>`);
    parts.push(markerElement(marker, legendX + 14, ly + 5, color, ""));
    parts.push(`<text x="${fmt(legendX + 28)}" y="${fmt(ly + 8.5)}" font-size="10" fill="#333">${esc(s.label)}</text>`);
    ly += 15;
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
