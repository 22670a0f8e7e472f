// Minimal deterministic SVG builder: fixed canvas, fixed fonts, no state.

export interface Margin {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export interface Frame {
  width: number;
  height: number;
  margin: Margin;
}

export const DEFAULT_FRAME: Frame = {
  width: 800,
  height: 500,
  margin: { left: 70, right: 30, top: 40, bottom: 55 },
};

export type Scale = (v: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const l0 = Math.log10(d0);
  const span = Math.log10(d1) - l0 || 1;
  return (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0);
}

export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const mult of [1, 2, 2.5, 5, 10]) {
    if (mult * mag >= rawStep) {
      step = mult * mag;
      break;
    }
  }
  const ticks: number[] = [];
  const start = Math.ceil(lo / step) * step;
  for (let v = start; v <= hi + 1e-9 * step; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); Math.pow(10, e) <= hi * (1 + 1e-9); e++) {
    const v = Math.pow(10, e);
    if (v >= lo * (1 - 1e-9)) ticks.push(v);
  }
  return ticks.length > 0 ? ticks : [lo, hi];
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1).replace("e+", "e");
  const s = v.toPrecision(4);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function el(
  tag: string,
  attrs: Record<string, string | number>,
  body = "",
): string {
  const a = Object.entries(attrs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? round(v) : v}"`)
    .join(" ");
  return body === "" && tag !== "text"
    ? `<${tag} ${a}/>`
    : `<${tag} ${a}>${body}</${tag}>`;
}

function round(v: number): string {
  return (Math.round(v * 100) / 100).toString();
}

export function text(
  x: number,
  y: number,
  s: string,
  opts: Record<string, string | number> = {},
): string {
  return el(
    "text",
    { x, y, "font-family": "monospace", "font-size": 12, fill: "#333", ...opts },
    esc(s),
  );
}

export function polylinePath(xs: number[], ys: number[]): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (!Number.isFinite(xs[i]) || !Number.isFinite(ys[i])) continue;
    parts.push(`${parts.length === 0 ? "M" : "L"}${round(xs[i])} ${round(ys[i])}`);
  }
  return parts.join("");
}

export const PALETTE = [
  "#1f6fb4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#17becf",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
  "#bcbd22",
];

// compact viridis ramp, linearly interpolated
const VIRIDIS: [number, number, number][] = [
  [68, 1, 84],
  [59, 82, 139],
  [33, 145, 140],
  [94, 201, 98],
  [253, 231, 37],
];

export function viridis(u: number): string {
  const t = Math.min(1, Math.max(0, u)) * (VIRIDIS.length - 1);
  const i = Math.min(VIRIDIS.length - 2, Math.floor(t));
  const f = t - i;
  const c = VIRIDIS[i].map((a, k) => Math.round(a + f * (VIRIDIS[i + 1][k] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

export interface AxisSpec {
  xTicks: number[];
  yTicks: number[];
  xScale: Scale;
  yScale: Scale;
  xLabel: string;
  yLabel: string;
  title?: string;
}

export function axes(frame: Frame, spec: AxisSpec): string {
  const { width, height, margin } = frame;
  const x0 = margin.left;
  const x1 = width - margin.right;
  const y0 = height - margin.bottom;
  const y1 = margin.top;
  const parts: string[] = [];
  parts.push(el("rect", {
    x: x0, y: y1, width: x1 - x0, height: y0 - y1,
    fill: "none", stroke: "#333", "stroke-width": 1,
  }));
  for (const t of spec.xTicks) {
    const px = spec.xScale(t);
    if (px < x0 - 0.5 || px > x1 + 0.5) continue;
    parts.push(el("line", { x1: px, y1: y0, x2: px, y2: y0 + 5, stroke: "#333" }));
    parts.push(text(px, y0 + 18, fmt(t), { "text-anchor": "middle" }));
  }
  for (const t of spec.yTicks) {
    const py = spec.yScale(t);
    if (py < y1 - 0.5 || py > y0 + 0.5) continue;
    parts.push(el("line", { x1: x0 - 5, y1: py, x2: x0, y2: py, stroke: "#333" }));
    parts.push(text(x0 - 8, py + 4, fmt(t), { "text-anchor": "end" }));
  }
  parts.push(text((x0 + x1) / 2, height - 12, spec.xLabel, { "text-anchor": "middle" }));
  parts.push(el(
    "g",
    { transform: `translate(16,${(y0 + y1) / 2}) rotate(-90)` },
    text(0, 0, spec.yLabel, { "text-anchor": "middle" }),
  ));
  if (spec.title) {
    parts.push(text((x0 + x1) / 2, y1 - 14, spec.title, {
      "text-anchor": "middle", "font-size": 14,
    }));
  }
  return parts.join("\n");
}

export function document(frame: Frame, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">`,
    el("rect", { x: 0, y: 0, width: frame.width, height: frame.height, fill: "white" }),
    body,
    "</svg>",
  ].join("\n");
}
