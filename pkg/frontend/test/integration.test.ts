// End-to-end: run every simulator preset through its CLI, then render the
// matching figure through this package's CLI. Skipped when the simulator
// binary is not installed. Slow (several minutes): the presets are real runs.

import { spawnSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, rmSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";
import { blockMagnitudes, subspace } from "../src/charts/heatmap.js";
import { latestCovariancePath, loadCovariance } from "../src/csv.js";

const BEC = process.env.BECSTROBE ?? "becstrobe";
const CLI = fileURLToPath(new URL("../dist/cli.js", import.meta.url));
const SLOW = 600_000;

const simulatorPresent = spawnSync(BEC, ["--version"], { encoding: "utf8" }).status === 0;
const available = simulatorPresent && existsSync(CLI);

describe.skipIf(!available)("figures from live preset runs", () => {
  const tmp = mkdtempSync(join(tmpdir(), "becstrobe-int-"));
  afterAll(() => rmSync(tmp, { recursive: true, force: true }));

  function simulate(preset: string): string {
    const out = join(tmp, preset);
    const r = spawnSync(BEC, ["preset", preset, "--out", out], {
      encoding: "utf8",
      timeout: SLOW - 30_000,
    });
    expect(r.status, `becstrobe preset ${preset}: ${r.stderr}`).toBe(0);
    return out;
  }

  function render(args: string[], out: string): string {
    const r = spawnSync(process.execPath, [CLI, ...args, "--out", out], { encoding: "utf8" });
    expect(r.status, `figures ${args.join(" ")}: ${r.stderr}`).toBe(0);
    expect(statSync(out).size).toBeGreaterThan(800);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("<svg");
    expect(svg).not.toContain("NaN");
    return svg;
  }

  it("fig1b: three-segment trace with probe shading", () => {
    const dir = simulate("fig1b");
    const svg = render(["trace", "--in", dir, "--modes", "1", "3", "5"], join(tmp, "fig1b.svg"));
    expect(svg).toContain("fill-opacity");
    expect(svg).toContain("mode 5");
  }, SLOW);

  it("fig1c_i: continuous-probe heatmap", () => {
    const dir = simulate("fig1c_i");
    render(["heatmap", "--in", dir, "--modes", "1", "3", "5"], join(tmp, "fig1c_i.svg"));
  }, SLOW);

  it("fig1c_ii: stroboscopic heatmap dominated by the (1,3) block", () => {
    const dir = simulate("fig1c_ii");
    render(["heatmap", "--in", dir, "--modes", "1", "3", "5"], join(tmp, "fig1c_ii.svg"));
    const m = loadCovariance(latestCovariancePath(dir));
    const mags = blockMagnitudes(subspace(m, [1, 3, 5]), [1, 3, 5]);
    const pair = mags.get("1,3")!;
    for (const [key, mag] of mags) {
      if (key !== "1,3") expect(pair, `block (1,3) vs (${key})`).toBeGreaterThan(10 * mag);
    }
  }, SLOW);

  it("fig2: pulse-window sweep panels", () => {
    const dir = simulate("fig2");
    const svg = render(["sweep", "--in", dir], join(tmp, "fig2.svg"));
    expect(svg).toContain("pulse window");
  }, SLOW);

  it("fig2_noninteracting: sweep without interactions", () => {
    const dir = simulate("fig2_noninteracting");
    render(["sweep", "--in", dir], join(tmp, "fig2_noninteracting.svg"));
  }, SLOW);

  it("fig3: negativity curve with its plateau", () => {
    const dir = simulate("fig3");
    const svg = render(["negativity", "--in", dir, "--pair", "1", "3"], join(tmp, "fig3.svg"));
    expect(svg).toContain("plateau");
  }, SLOW);

  it("fig4_nofeedback: trajectory fan with envelope", () => {
    const dir = simulate("fig4_nofeedback");
    const svg = render(["trajectories", "--in", dir, "--mode", "3"], join(tmp, "fig4_nf.svg"));
    expect(svg).toContain("rms envelope");
    expect(svg).toMatch(/\d+ trajectories/);
  }, SLOW);

  it("fig4_feedback: damped trajectory fan", () => {
    const dir = simulate("fig4_feedback");
    render(["trajectories", "--in", dir, "--mode", "3"], join(tmp, "fig4_fb.svg"));
  }, SLOW);
});
