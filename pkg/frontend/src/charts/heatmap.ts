// Covariance-magnitude heatmap from a covariance_t*.csv snapshot.

import { basename } from "node:path";
import { covariancePaths, loadCovariance } from "../csv.js";
import { DEFAULT_FRAME, axes, document, el, fmt, linearScale, text, viridis } from "../svg.js";

export interface HeatmapOptions {
  dir: string;
  modes?: number[]; // 1-based subspace; defaults to every mode in the file
  time?: number; // pick the snapshot closest to this t; default latest
}

export function pickSnapshot(dir: string, time?: number): string {
  const paths = covariancePaths(dir);
  if (paths.length === 0) throw new Error(`${dir}: no covariance_t*.csv snapshots`);
  if (time === undefined) return paths[paths.length - 1];
  let best = paths[0];
  let bestErr = Infinity;
  for (const p of paths) {
    const m = /covariance_t([0-9.]+)\.csv$/.exec(p);
    const t = m ? Number(m[1]) : NaN;
    const err = Math.abs(t - time);
    if (err < bestErr) {
      bestErr = err;
      best = p;
    }
  }
  return best;
}

export function subspace(matrix: number[][], modes: number[]): number[][] {
  const idx: number[] = [];
  for (const j of modes) idx.push(2 * (j - 1), 2 * (j - 1) + 1);
  for (const i of idx) {
    if (i < 0 || i >= matrix.length) {
      throw new Error(`mode selection out of range for a ${matrix.length / 2}-mode matrix`);
    }
  }
  return idx.map((r) => idx.map((c) => matrix[r][c]));
}

// Largest |entry| in each off-diagonal 2x2 mode block of a reduced matrix.
// Keyed "j,k" by the 1-based labels passed in `modes`.
export function blockMagnitudes(matrix: number[][], modes: number[]): Map<string, number> {
  const out = new Map<string, number>();
  for (let a = 0; a < modes.length; a++) {
    for (let b = a + 1; b < modes.length; b++) {
      let mag = 0;
      for (const dr of [0, 1]) {
        for (const dc of [0, 1]) {
          mag = Math.max(mag, Math.abs(matrix[2 * a + dr][2 * b + dc]));
        }
      }
      out.set(`${modes[a]},${modes[b]}`, mag);
    }
  }
  return out;
}

export function renderHeatmap(opts: HeatmapOptions): string {
  const path = pickSnapshot(opts.dir, opts.time);
  const full = loadCovariance(path);
  const nModes = full.length / 2;
  const modes = opts.modes ?? Array.from({ length: nModes }, (_, i) => i + 1);
  const matrix = subspace(full, modes);
  const n = matrix.length;

  let vmax = 0;
  for (const row of matrix) for (const v of row) vmax = Math.max(vmax, Math.abs(v));
  if (vmax === 0) vmax = 1;

  const fr = { ...DEFAULT_FRAME, width: 640, height: 600 };
  const x0 = fr.margin.left;
  const x1 = fr.width - fr.margin.right - 70; // reserve room for the colorbar
  const y0 = fr.height - fr.margin.bottom;
  const y1 = fr.margin.top;
  const side = Math.min(x1 - x0, y0 - y1);
  const cell = side / n;

  const labels: string[] = [];
  for (const j of modes) labels.push(`x${j}`, `p${j}`);

  const parts: string[] = [];
  for (let r = 0; r < n; r++) {
    for (let c = 0; c < n; c++) {
      parts.push(el("rect", {
        x: x0 + c * cell,
        y: y1 + r * cell,
        width: cell + 0.5,
        height: cell + 0.5,
        fill: viridis(Math.abs(matrix[r][c]) / vmax),
      }));
    }
  }
  for (let i = 0; i < n; i++) {
    const mid = (i + 0.5) * cell;
    parts.push(text(x0 + mid, y1 + n * cell + 14, labels[i], { "text-anchor": "middle" }));
    parts.push(text(x0 - 6, y1 + mid + 4, labels[i], { "text-anchor": "end" }));
  }
  parts.push(el("rect", {
    x: x0, y: y1, width: n * cell, height: n * cell,
    fill: "none", stroke: "#333", "stroke-width": 1,
  }));

  // colorbar
  const cbX = x0 + n * cell + 26;
  for (let i = 0; i < 64; i++) {
    const u = 1 - i / 63;
    parts.push(el("rect", {
      x: cbX, y: y1 + (i / 64) * side, width: 16, height: side / 64 + 0.5,
      fill: viridis(u),
    }));
  }
  parts.push(el("rect", { x: cbX, y: y1, width: 16, height: side, fill: "none", stroke: "#333" }));
  parts.push(text(cbX + 22, y1 + 10, fmt(vmax)));
  parts.push(text(cbX + 22, y1 + side, "0"));
  parts.push(text(x0 + (n * cell) / 2, y1 - 10, `|A| at ${basename(path)}`, {
    "text-anchor": "middle",
  }));

  return document(fr, parts.join("\n"));
}
