// Variance traces over time with grey shading while the probe is on,
// optionally overlaid with the impulsive-limit curve from the metadata.

import { join } from "node:path";
import { column, loadMetadata, loadTable, requireColumns } from "../csv.js";
import {
  DEFAULT_FRAME,
  PALETTE,
  axes,
  document,
  el,
  linearScale,
  logScale,
  logTicks,
  niceTicks,
  polylinePath,
  text,
} from "../svg.js";

export interface TraceOptions {
  dir: string;
  modes?: number[]; // 1-based
  frame?: "com" | "lab";
  log?: boolean;
  qndOverlay?: boolean; // needs exactly one mode and nu_j in metadata
}

interface Shaded {
  t0: number;
  t1: number;
}

// contiguous sample spans with the gate open
export function probeSpans(t: number[], on: number[]): Shaded[] {
  const spans: Shaded[] = [];
  let start: number | null = null;
  for (let i = 0; i < t.length; i++) {
    if (on[i] > 0 && start === null) start = t[i];
    if (on[i] <= 0 && start !== null) {
      spans.push({ t0: start, t1: t[i] });
      start = null;
    }
  }
  if (start !== null) spans.push({ t0: start, t1: t[t.length - 1] });
  return spans;
}

export function renderTrace(opts: TraceOptions): string {
  const modes = opts.modes ?? [3];
  const frameName = opts.frame ?? "com";
  const table = loadTable(join(opts.dir, "timeseries.csv"), "timeseries");
  const varCols = modes.map((j) => `var_x_${frameName}_${j}`);
  requireColumns(table, ["t", "probe_on", ...varCols]);
  const t = column(table, "t");
  const on = column(table, "probe_on");
  const series = varCols.map((c) => column(table, c));

  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    for (const v of s) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }

  let overlay: { tau: number[]; pred: number[] } | null = null;
  if (opts.qndOverlay) {
    if (modes.length !== 1) {
      throw new Error("qnd overlay needs exactly one mode");
    }
    const meta = loadMetadata(opts.dir);
    const nuTable = (meta.derived as any)?.nu_per_segment as number[][] | undefined;
    if (!nuTable || nuTable.length === 0) {
      throw new Error(`${opts.dir}: metadata has no nu_per_segment table`);
    }
    const nu = nuTable[0][modes[0] - 1];
    const tau = column(table, "tau");
    overlay = { tau, pred: tau.map((x) => 1 / (2 * (1 + 2 * nu * x))) };
    for (const v of overlay.pred) if (v < lo) lo = v;
  }

  const fr = DEFAULT_FRAME;
  const x0 = fr.margin.left;
  const x1 = fr.width - fr.margin.right;
  const y0 = fr.height - fr.margin.bottom;
  const y1 = fr.margin.top;
  const xScale = linearScale(t[0], t[t.length - 1], x0, x1);
  const pad = opts.log ? 1 : 0.05 * (hi - lo || 1);
  const yLo = opts.log ? lo / 1.5 : lo - pad;
  const yHi = opts.log ? hi * 1.5 : hi + pad;
  const yScale = opts.log ? logScale(yLo, yHi, y0, y1) : linearScale(yLo, yHi, y0, y1);

  const parts: string[] = [];
  for (const span of probeSpans(t, on)) {
    const w = Math.max(xScale(span.t1) - xScale(span.t0), 0.75);
    parts.push(el("rect", {
      x: xScale(span.t0), y: y1, width: w, height: y0 - y1,
      fill: "#888", "fill-opacity": 0.22,
    }));
  }
  parts.push(axes(fr, {
    xTicks: niceTicks(t[0], t[t.length - 1]),
    yTicks: opts.log ? logTicks(yLo, yHi) : niceTicks(yLo, yHi),
    xScale,
    yScale,
    xLabel: "t (trap units)",
    yLabel: `var[x_j] (${frameName === "com" ? "comoving" : "lab"})`,
  }));
  series.forEach((s, i) => {
    parts.push(el("path", {
      d: polylinePath(t.map(xScale), s.map(yScale)),
      fill: "none", stroke: PALETTE[i % PALETTE.length], "stroke-width": 1.5,
    }));
    parts.push(text(x1 - 10, y1 + 16 + 16 * i, `mode ${modes[i]}`, {
      "text-anchor": "end", fill: PALETTE[i % PALETTE.length],
    }));
  });
  if (overlay) {
    parts.push(el("path", {
      d: polylinePath(t.map(xScale), overlay.pred.map(yScale)),
      fill: "none", stroke: "#000", "stroke-width": 1, "stroke-dasharray": "5 3",
    }));
    parts.push(text(x1 - 10, y1 + 16 + 16 * modes.length, "impulsive limit", {
      "text-anchor": "end",
    }));
  }
  return document(fr, parts.join("\n"));
}
