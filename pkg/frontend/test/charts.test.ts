import { mkdirSync, mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";
import { latestCovariancePath, loadCovariance } from "../src/csv.js";
import { blockMagnitudes, pickSnapshot, renderHeatmap, subspace } from "../src/charts/heatmap.js";
import { renderNegativity } from "../src/charts/negativity.js";
import { renderSweep } from "../src/charts/sweep.js";
import { probeSpans, renderTrace } from "../src/charts/trace.js";
import { renderTrajectories } from "../src/charts/trajectories.js";

const FIXTURES = fileURLToPath(new URL("../fixtures", import.meta.url));
const SQUEEZE = join(FIXTURES, "squeeze");
const ENTANGLE = join(FIXTURES, "entangle");
const SWEEP = join(FIXTURES, "sweepmini");

function expectSvg(s: string): void {
  expect(s.startsWith("<svg ")).toBe(true);
  expect(s.trimEnd().endsWith("</svg>")).toBe(true);
  expect(s.length).toBeGreaterThan(1000);
  expect(s).not.toContain("NaN");
}

const tmp = mkdtempSync(join(tmpdir(), "becstrobe-charts-"));
afterAll(() => rmSync(tmp, { recursive: true, force: true }));

describe("trace", () => {
  it("renders variance traces with probe shading", () => {
    const svg = renderTrace({ dir: SQUEEZE, modes: [1, 3] });
    expectSvg(svg);
    expect(svg).toContain("mode 1");
    expect(svg).toContain("mode 3");
    expect((svg.match(/fill-opacity/g) ?? []).length).toBeGreaterThan(3);
  });

  it("overlays the impulsive-limit curve for a single mode", () => {
    const svg = renderTrace({ dir: SQUEEZE, modes: [3], qndOverlay: true, log: true });
    expectSvg(svg);
    expect(svg).toContain("impulsive limit");
  });

  it("refuses the overlay for multiple modes", () => {
    expect(() => renderTrace({ dir: SQUEEZE, modes: [1, 3], qndOverlay: true }))
      .toThrow(/exactly one mode/);
  });

  it("fails fast on a mode the run never stored", () => {
    expect(() => renderTrace({ dir: SQUEEZE, modes: [9] }))
      .toThrow(/missing column.*var_x_com_9/);
  });

  it("errors on an empty time series instead of drawing a blank", () => {
    const dir = join(tmp, "empty-run");
    mkdirSync(dir);
    writeFileSync(join(dir, "timeseries.csv"),
      "# becstrobe timeseries schema v1\nt,tau,probe_on,var_x_com_3\n");
    expect(() => renderTrace({ dir })).toThrow(/empty timeseries/);
  });

  it("finds contiguous probe-on spans", () => {
    const spans = probeSpans([0, 1, 2, 3, 4, 5], [0, 1, 1, 0, 1, 1]);
    expect(spans).toEqual([{ t0: 1, t1: 3 }, { t0: 4, t1: 5 }]);
  });

  it("is deterministic", () => {
    const a = renderTrace({ dir: SQUEEZE, modes: [3], qndOverlay: true });
    const b = renderTrace({ dir: SQUEEZE, modes: [3], qndOverlay: true });
    expect(a).toBe(b);
  });
});

describe("heatmap", () => {
  it("renders the full matrix by default", () => {
    const svg = renderHeatmap({ dir: SQUEEZE });
    expectSvg(svg);
    expect(svg).toContain("x1");
    expect(svg).toContain("p5");
    expect((svg.match(/rgb\(/g) ?? []).length).toBeGreaterThan(100);
  });

  it("selects the snapshot nearest a requested time", () => {
    const first = pickSnapshot(SQUEEZE, 6.3);
    const latest = pickSnapshot(SQUEEZE);
    expect(first).not.toBe(latest);
    expect(first).toMatch(/covariance_t00006\.2832\.csv$/);
  });

  it("rejects modes outside the stored subspace", () => {
    const m = loadCovariance(latestCovariancePath(SQUEEZE));
    expect(() => subspace(m, [6])).toThrow(/out of range/);
  });

  it("shows the resonant pair dominating all other cross blocks (stroboscopic)", () => {
    const m = loadCovariance(latestCovariancePath(join(FIXTURES, "fig1c_ii")));
    const mags = blockMagnitudes(subspace(m, [1, 3, 5]), [1, 3, 5]);
    const pair = mags.get("1,3")!;
    for (const [key, mag] of mags) {
      if (key !== "1,3") expect(pair).toBeGreaterThan(10 * mag);
    }
    expectSvg(renderHeatmap({ dir: join(FIXTURES, "fig1c_ii"), modes: [1, 3, 5] }));
  });

  it("shows no such selectivity for the continuous probe", () => {
    const m = loadCovariance(latestCovariancePath(join(FIXTURES, "fig1c_i")));
    const mags = blockMagnitudes(subspace(m, [1, 3, 5]), [1, 3, 5]);
    const pair = mags.get("1,3")!;
    let othersMax = 0;
    for (const [key, mag] of mags) {
      if (key !== "1,3") othersMax = Math.max(othersMax, mag);
    }
    expect(pair).toBeLessThan(10 * othersMax);
    expectSvg(renderHeatmap({ dir: join(FIXTURES, "fig1c_i"), modes: [1, 3, 5] }));
  });
});

describe("sweep", () => {
  it("renders variance and metric panels", () => {
    const svg = renderSweep({ dir: SWEEP });
    expectSvg(svg);
    expect(svg).toContain("var_x_com_3");
    expect(svg).toContain("P_1_3");
    expect(svg).toContain("pulse window");
  });
});

describe("negativity", () => {
  it("renders the pair curve with its plateau", () => {
    const svg = renderNegativity({ dir: ENTANGLE });
    expectSvg(svg);
    expect(svg).toMatch(/plateau 0\.914/);
  });

  it("fails fast when the pair was not tracked", () => {
    expect(() => renderNegativity({ dir: ENTANGLE, pair: [3, 5] }))
      .toThrow(/missing column.*E_3_5/);
  });
});

describe("trajectories", () => {
  it("renders the stored fan with the rms envelope", () => {
    const svg = renderTrajectories({ dir: SQUEEZE });
    expectSvg(svg);
    expect(svg).toContain("3 trajectories");
    expect(svg).toContain("rms envelope");
  });

  it("can drop the envelope and switch quadrature", () => {
    const svg = renderTrajectories({ dir: SQUEEZE, mode: 1, quadrature: "p", envelope: false });
    expectSvg(svg);
    expect(svg).not.toContain("rms envelope");
    expect(svg).toContain("p_1");
  });
});
