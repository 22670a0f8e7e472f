// Two-panel summary of a pulse-window sweep: endpoint variances (log y)
// and endpoint metrics against the window fraction.

import { join } from "node:path";
import { column, columnsMatching, loadTable } from "../csv.js";
import {
  Frame,
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

export interface SweepOptions {
  dir: string;
}

function panel(
  fr: Frame,
  xs: number[],
  series: { name: string; ys: number[] }[],
  yLabel: string,
  log: boolean,
  yRange?: [number, number],
): string {
  const x0 = fr.margin.left;
  const x1 = fr.width - fr.margin.right;
  const y0 = fr.height - fr.margin.bottom;
  const y1 = fr.margin.top;
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    for (const v of s.ys) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (yRange) [lo, hi] = yRange;
  else if (log) {
    lo /= 1.5;
    hi *= 1.5;
  } else {
    const pad = 0.05 * (hi - lo || 1);
    lo -= pad;
    hi += pad;
  }
  const xScale = linearScale(xs[0], xs[xs.length - 1], x0, x1);
  const yScale = log ? logScale(lo, hi, y0, y1) : linearScale(lo, hi, y0, y1);
  const parts = [axes(fr, {
    xTicks: niceTicks(xs[0], xs[xs.length - 1]),
    yTicks: log ? logTicks(lo, hi) : niceTicks(lo, hi),
    xScale,
    yScale,
    xLabel: "pulse window (fraction of a period)",
    yLabel,
  })];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    parts.push(el("path", {
      d: polylinePath(xs.map(xScale), s.ys.map(yScale)),
      fill: "none", stroke: color, "stroke-width": 1.5,
    }));
    for (let k = 0; k < xs.length; k++) {
      parts.push(el("circle", { cx: xScale(xs[k]), cy: yScale(s.ys[k]), r: 2.5, fill: color }));
    }
    parts.push(text(x1 - 10, y1 + 16 + 16 * i, s.name, { "text-anchor": "end", fill: color }));
  });
  return parts.join("\n");
}

export function renderSweep(opts: SweepOptions): string {
  const table = loadTable(join(opts.dir, "sweep.csv"), "sweep");
  const xs = column(table, "delta_phi_frac");
  const varCols = columnsMatching(table, /^var_/);
  const metricCols = columnsMatching(table, /^(E|P|DH)_/);
  if (varCols.length === 0) throw new Error(`${opts.dir}/sweep.csv: no var_* columns`);

  const width = 800;
  const half = 380;
  const top: Frame = { width, height: half, margin: { top: 30, right: 30, bottom: 48, left: 70 } };
  const parts: string[] = [];
  parts.push(panel(
    top,
    xs,
    varCols.map((c) => ({ name: c, ys: column(table, c) })),
    "endpoint variance",
    true,
  ));
  if (metricCols.length > 0) {
    const inner = panel(
      { ...top, margin: { ...top.margin } },
      xs,
      metricCols.map((c) => ({ name: c, ys: column(table, c) })),
      "endpoint metric",
      false,
      [0, 1.05],
    );
    parts.push(el("g", { transform: `translate(0 ${half})` }, inner));
  }
  const fr: Frame = { width, height: metricCols.length > 0 ? 2 * half : half, margin: top.margin };
  return document(fr, parts.join("\n"));
}
