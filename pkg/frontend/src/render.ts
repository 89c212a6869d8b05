/**
 * SVG figure rendering for sweep results.
 *
 * Two figure kinds:
 *  - scatter: one metric against another, a point per (model, sweep value,
 *    replication), one color per model;
 *  - lines: a metric against the sweep parameter, per-model mean line with a
 *    translucent +/- one-standard-deviation band across replications.
 *
 * Output is a standalone SVG string. Rendering is deterministic: numbers are
 * written with fixed precision and no timestamp is embedded unless asked.
 */

import { writeFileSync } from "fs";
import { SweepRow, metricsIn, modelsIn, parseSweepCsv } from "./csv.js";

export type FigureKind = "scatter" | "lines";

export interface FigureSpec {
  csvPath: string;
  kind: FigureKind;
  x: string; // metric name (scatter) or sweep parameter name (lines)
  y: string; // metric name
  outPath: string;
  title?: string;
  timestamp?: boolean;
}

const WIDTH = 800;
const HEIGHT = 500;
const MARGIN = { left: 70, right: 170, top: 40, bottom: 55 };
const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const fmt = (v: number): string => {
  if (!Number.isFinite(v)) return "0";
  return v.toFixed(3).replace(/\.?0+$/, "") || "0";
};

interface Scale {
  lo: number;
  hi: number;
  px: (v: number) => number;
}

function isAucMetric(name: string): boolean {
  return name.toLowerCase().includes("auc");
}

function makeScale(values: number[], pixLo: number, pixHi: number,
                   aucAxis: boolean): Scale {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (aucAxis) {
    // AUC axes always show at least [0.4, 1.0]
    lo = Math.min(lo, 0.4);
    hi = Math.max(hi, 1.0);
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = 0.04 * (hi - lo);
  lo -= pad;
  hi += pad;
  return {
    lo,
    hi,
    px: (v) => pixLo + ((v - lo) / (hi - lo)) * (pixHi - pixLo),
  };
}

function ticks(scale: Scale, n = 6): number[] {
  const out: number[] = [];
  for (let i = 0; i <= n; i++) {
    out.push(scale.lo + ((scale.hi - scale.lo) * i) / n);
  }
  return out;
}

function axes(xs: Scale, ys: Scale, xLabel: string, yLabel: string): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`);
  for (const t of ticks(xs)) {
    const px = fmt(xs.px(t));
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(`<text x="${px}" y="${y0 + 20}" font-size="11" text-anchor="middle">${fmt(t)}</text>`);
  }
  for (const t of ticks(ys)) {
    const py = fmt(ys.px(t));
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    parts.push(`<text x="${x0 - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`);
    parts.push(`<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#eee"/>`);
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" font-size="13" text-anchor="middle">${xLabel}</text>`);
  parts.push(`<text x="18" y="${(y0 + y1) / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 ${(y0 + y1) / 2})">${yLabel}</text>`);
  return parts.join("\n");
}

function legend(models: string[]): string {
  const x = WIDTH - MARGIN.right + 16;
  return models
    .map((m, i) => {
      const y = MARGIN.top + 14 + i * 20;
      const color = PALETTE[i % PALETTE.length];
      return (
        `<rect x="${x}" y="${y - 9}" width="12" height="12" fill="${color}"/>` +
        `<text x="${x + 18}" y="${y}" font-size="12" dominant-baseline="middle">${m}</text>`
      );
    })
    .join("\n");
}

function requireMetric(rows: SweepRow[], name: string, path: string): void {
  if (!metricsIn(rows).has(name)) {
    const known = [...metricsIn(rows)].sort().join(", ");
    throw new Error(
      `metric '${name}' not found in ${path} (available: ${known})`);
  }
}

function mean(vals: number[]): number {
  return vals.reduce((a, b) => a + b, 0) / vals.length;
}

function std(vals: number[]): number {
  const m = mean(vals);
  return Math.sqrt(mean(vals.map((v) => (v - m) * (v - m))));
}

function renderScatter(rows: SweepRow[], spec: FigureSpec): string {
  requireMetric(rows, spec.x, spec.csvPath);
  requireMetric(rows, spec.y, spec.csvPath);
  const models = modelsIn(rows);
  const points: { model: string; x: number; y: number }[] = [];
  const byKey = new Map<string, { x?: number; y?: number }>();
  for (const r of rows) {
    if (r.metric !== spec.x && r.metric !== spec.y) continue;
    const key = `${r.model}|${r.sweepValue}|${r.replication}`;
    const entry = byKey.get(key) ?? {};
    if (r.metric === spec.x) entry.x = r.value;
    if (r.metric === spec.y) entry.y = r.value;
    byKey.set(key, entry);
  }
  for (const [key, entry] of [...byKey.entries()].sort()) {
    if (entry.x !== undefined && entry.y !== undefined) {
      points.push({ model: key.split("|")[0], x: entry.x, y: entry.y });
    }
  }
  if (points.length === 0) {
    throw new Error(
      `no (x, y) pairs: '${spec.x}' and '${spec.y}' never measured on the ` +
      "same run");
  }
  const xs = makeScale(points.map((p) => p.x), MARGIN.left,
                       WIDTH - MARGIN.right, isAucMetric(spec.x));
  const ys = makeScale(points.map((p) => p.y), HEIGHT - MARGIN.bottom,
                       MARGIN.top, isAucMetric(spec.y));
  const series = models.map((model, i) => {
    const color = PALETTE[i % PALETTE.length];
    const dots = points
      .filter((p) => p.model === model)
      .map((p) => `<circle cx="${fmt(xs.px(p.x))}" cy="${fmt(ys.px(p.y))}" r="4" fill="${color}" fill-opacity="0.75"/>`)
      .join("\n");
    return `<g data-series="${model}">\n${dots}\n</g>`;
  });
  return [axes(xs, ys, spec.x, spec.y), ...series, legend(models)].join("\n");
}

function renderLines(rows: SweepRow[], spec: FigureSpec): string {
  requireMetric(rows, spec.y, spec.csvPath);
  const params = new Set(rows.map((r) => r.sweepParam));
  if (spec.x !== "sweep_value" && !params.has(spec.x)) {
    throw new Error(
      `sweep parameter '${spec.x}' not found in ${spec.csvPath} ` +
      `(CSV sweeps: ${[...params].sort().join(", ")})`);
  }
  const wanted = rows.filter((r) => r.metric === spec.y);
  const models = modelsIn(wanted);
  const grid = [...new Set(wanted.map((r) => r.sweepValue))].sort(
    (a, b) => a - b);
  const cells = new Map<string, number[]>();
  for (const r of wanted) {
    const key = `${r.model}|${r.sweepValue}`;
    (cells.get(key) ?? cells.set(key, []).get(key)!).push(r.value);
  }
  const allValues = wanted.map((r) => r.value);
  const xs = makeScale(grid, MARGIN.left, WIDTH - MARGIN.right, false);
  const ys = makeScale(allValues, HEIGHT - MARGIN.bottom, MARGIN.top,
                       isAucMetric(spec.y));
  const series = models.map((model, i) => {
    const color = PALETTE[i % PALETTE.length];
    const stats = grid
      .map((v) => ({ v, vals: cells.get(`${model}|${v}`) ?? [] }))
      .filter((c) => c.vals.length > 0)
      .map((c) => ({ v: c.v, m: mean(c.vals), s: std(c.vals) }));
    const line = stats
      .map((c, j) => `${j === 0 ? "M" : "L"}${fmt(xs.px(c.v))},${fmt(ys.px(c.m))}`)
      .join(" ");
    const upper = stats.map(
      (c) => `${fmt(xs.px(c.v))},${fmt(ys.px(c.m + c.s))}`);
    const lower = [...stats].reverse().map(
      (c) => `${fmt(xs.px(c.v))},${fmt(ys.px(c.m - c.s))}`);
    const band = stats.length > 1
      ? `<polygon points="${[...upper, ...lower].join(" ")}" fill="${color}" fill-opacity="0.15"/>`
      : "";
    const marks = stats
      .map((c) => `<circle cx="${fmt(xs.px(c.v))}" cy="${fmt(ys.px(c.m))}" r="3.5" fill="${color}"/>`)
      .join("\n");
    return `<g data-series="${model}">\n${band}\n<path d="${line}" fill="none" stroke="${color}" stroke-width="2"/>\n${marks}\n</g>`;
  });
  return [axes(xs, ys, spec.x, spec.y), ...series, legend(models)].join("\n");
}

export function renderFigure(spec: FigureSpec): string {
  const rows = parseSweepCsv(spec.csvPath);
  const body = spec.kind === "scatter"
    ? renderScatter(rows, spec)
    : renderLines(rows, spec);
  const title = spec.title ?? `${spec.y} vs ${spec.x}`;
  const stamp = spec.timestamp
    ? `<!-- rendered ${new Date().toISOString()} -->\n`
    : "";
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
    stamp +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>\n` +
    `<text x="${WIDTH / 2}" y="24" font-size="15" text-anchor="middle" font-weight="bold">${title}</text>\n` +
    `${body}\n</svg>\n`
  );
}

export function render(spec: FigureSpec): void {
  if (spec.kind !== "scatter" && spec.kind !== "lines") {
    throw new Error(`unknown figure kind '${spec.kind}'`);
  }
  writeFileSync(spec.outPath, renderFigure(spec), "utf-8");
}
