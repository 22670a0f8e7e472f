// Logarithmic negativity of one mode pair against accumulated probe time,
// with the analytic late-time plateau from the run metadata as a dashed line.

import { join } from "node:path";
import { column, loadMetadata, loadTable, requireColumns } from "../csv.js";
import {
  DEFAULT_FRAME,
  axes,
  document,
  el,
  fmt,
  linearScale,
  niceTicks,
  polylinePath,
  text,
} from "../svg.js";

export interface NegativityOptions {
  dir: string;
  pair?: [number, number]; // 1-based, default [1, 3]
}

export function renderNegativity(opts: NegativityOptions): string {
  const [j, k] = opts.pair ?? [1, 3];
  const col = `E_${j}_${k}`;
  const table = loadTable(join(opts.dir, "timeseries.csv"), "timeseries");
  requireColumns(table, ["tau", col]);
  const tau = column(table, "tau");
  const e = column(table, col);

  const meta = loadMetadata(opts.dir);
  const bench = (meta.derived as any)?.qnd_pair_benchmarks?.[`${j},${k}`];
  const asymptote: number | undefined = bench?.log_negativity_asymptote;

  let hi = Math.max(...e, asymptote ?? 0);
  if (hi <= 0) hi = 1;

  const fr = DEFAULT_FRAME;
  const x0 = fr.margin.left;
  const x1 = fr.width - fr.margin.right;
  const y0 = fr.height - fr.margin.bottom;
  const y1 = fr.margin.top;
  const xScale = linearScale(tau[0], tau[tau.length - 1], x0, x1);
  const yScale = linearScale(0, 1.1 * hi, y0, y1);

  const parts: string[] = [];
  parts.push(axes(fr, {
    xTicks: niceTicks(tau[0], tau[tau.length - 1]),
    yTicks: niceTicks(0, 1.1 * hi),
    xScale,
    yScale,
    xLabel: "accumulated probe time tau",
    yLabel: `E_N(${j},${k})`,
  }));
  parts.push(el("path", {
    d: polylinePath(tau.map(xScale), e.map(yScale)),
    fill: "none", stroke: "#1f77b4", "stroke-width": 1.5,
  }));
  if (asymptote !== undefined) {
    const y = yScale(asymptote);
    parts.push(el("line", {
      x1: x0, y1: y, x2: x1, y2: y,
      stroke: "#d62728", "stroke-width": 1, "stroke-dasharray": "6 4",
    }));
    parts.push(text(x1 - 10, y - 6, `plateau ${fmt(asymptote)}`, {
      "text-anchor": "end", fill: "#d62728",
    }));
  }
  return document(fr, parts.join("\n"));
}
