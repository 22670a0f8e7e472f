// Fan of conditional mode means across stored trajectories, with the
// random-walk RMS envelope expected for an undamped monitored mode.

import { join } from "node:path";
import { column, loadMetadata, loadTable, requireColumns } from "../csv.js";
import {
  DEFAULT_FRAME,
  axes,
  document,
  el,
  linearScale,
  niceTicks,
  polylinePath,
  text,
} from "../svg.js";

export interface TrajectoriesOptions {
  dir: string;
  mode?: number; // 1-based, default 3
  quadrature?: "x" | "p";
  envelope?: boolean; // default on
}

export function renderTrajectories(opts: TrajectoriesOptions): string {
  const mode = opts.mode ?? 3;
  const quad = opts.quadrature ?? "x";
  const col = `${quad}_com_${mode}`;
  const table = loadTable(join(opts.dir, "trajectories.csv"), "trajectories");
  requireColumns(table, ["t", "trajectory", col]);
  const t = column(table, "t");
  const id = column(table, "trajectory");
  const v = column(table, col);

  // long format, grouped by trajectory id
  const byTraj = new Map<number, { t: number[]; v: number[] }>();
  for (let i = 0; i < t.length; i++) {
    let g = byTraj.get(id[i]);
    if (!g) {
      g = { t: [], v: [] };
      byTraj.set(id[i], g);
    }
    g.t.push(t[i]);
    g.v.push(v[i]);
  }
  if (byTraj.size === 0) throw new Error(`${opts.dir}/trajectories.csv: no rows`);

  let envelope: { t: number[]; r: number[] } | null = null;
  if (opts.envelope !== false) {
    const meta = loadMetadata(opts.dir);
    const nuTable = (meta.derived as any)?.nu_per_segment as number[][] | undefined;
    const nu = nuTable?.[0]?.[mode - 1];
    if (nu !== undefined) {
      const ts = loadTable(join(opts.dir, "timeseries.csv"), "timeseries");
      requireColumns(ts, ["t", "tau"]);
      const tt = column(ts, "t");
      const tau = column(ts, "tau");
      envelope = { t: tt, r: tau.map((x) => Math.sqrt((nu * x) / 2)) };
    }
  }

  let amp = 1e-9;
  for (const x of v) amp = Math.max(amp, Math.abs(x));
  if (envelope) for (const r of envelope.r) amp = Math.max(amp, r);
  amp *= 1.08;

  const fr = DEFAULT_FRAME;
  const x0 = fr.margin.left;
  const x1 = fr.width - fr.margin.right;
  const y0 = fr.height - fr.margin.bottom;
  const y1 = fr.margin.top;
  const tMin = Math.min(...t);
  const tMax = Math.max(...t);
  const xScale = linearScale(tMin, tMax, x0, x1);
  const yScale = linearScale(-amp, amp, y0, y1);

  const parts: string[] = [];
  parts.push(axes(fr, {
    xTicks: niceTicks(tMin, tMax),
    yTicks: niceTicks(-amp, amp),
    xScale,
    yScale,
    xLabel: "t (trap units)",
    yLabel: `<${quad}_${mode}> (comoving)`,
  }));
  parts.push(el("line", {
    x1: x0, y1: yScale(0), x2: x1, y2: yScale(0), stroke: "#bbb", "stroke-width": 0.8,
  }));
  const ids = [...byTraj.keys()].sort((a, b) => a - b);
  for (const trajId of ids) {
    const g = byTraj.get(trajId)!;
    parts.push(el("path", {
      d: polylinePath(g.t.map(xScale), g.v.map(yScale)),
      fill: "none", stroke: "#1f77b4", "stroke-width": 0.8, "stroke-opacity": 0.55,
    }));
  }
  if (envelope) {
    for (const sign of [1, -1]) {
      parts.push(el("path", {
        d: polylinePath(envelope.t.map(xScale), envelope.r.map((r) => yScale(sign * r))),
        fill: "none", stroke: "#d62728", "stroke-width": 1.2, "stroke-dasharray": "6 4",
      }));
    }
    parts.push(text(x1 - 10, y1 + 16, "rms envelope", { "text-anchor": "end", fill: "#d62728" }));
  }
  parts.push(text(x1 - 10, y1 + 32, `${byTraj.size} trajectories`, { "text-anchor": "end" }));
  return document(fr, parts.join("\n"));
}
