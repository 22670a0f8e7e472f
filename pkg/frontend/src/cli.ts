#!/usr/bin/env node
// figures <kind> --in DIR --out FILE
// Renders SVG figures from a simulation output directory.

import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { renderHeatmap } from "./charts/heatmap.js";
import { renderNegativity } from "./charts/negativity.js";
import { renderSweep } from "./charts/sweep.js";
import { renderTrace } from "./charts/trace.js";
import { renderTrajectories } from "./charts/trajectories.js";

function emit(out: string, svg: string): void {
  writeFileSync(out, svg);
  console.log(`wrote ${out}`);
}

function run(fn: () => void): void {
  try {
    fn();
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(2);
  }
}

const io = {
  in: { type: "string" as const, demandOption: true as const, describe: "run output directory" },
  out: { type: "string" as const, demandOption: true as const, describe: "output SVG path" },
};

void yargs(hideBin(process.argv))
  .scriptName("figures")
  .command(
    "trace",
    "variance traces with probe-on shading",
    (y) => y.options({
      ...io,
      modes: { type: "number", array: true, default: [3], describe: "1-based mode numbers" },
      frame: { choices: ["com", "lab"] as const, default: "com" as const },
      log: { type: "boolean", default: false, describe: "log y axis" },
      qnd: { type: "boolean", default: false, describe: "overlay the impulsive-limit curve" },
    }),
    (a) => run(() => emit(a.out, renderTrace({
      dir: a.in, modes: a.modes, frame: a.frame, log: a.log, qndOverlay: a.qnd,
    }))),
  )
  .command(
    "heatmap",
    "|covariance| heatmap from a snapshot",
    (y) => y.options({
      ...io,
      modes: { type: "number", array: true, describe: "1-based subspace (default: all modes)" },
      time: { type: "number", describe: "snapshot time (default: latest)" },
    }),
    (a) => run(() => emit(a.out, renderHeatmap({ dir: a.in, modes: a.modes, time: a.time }))),
  )
  .command(
    "sweep",
    "endpoint variances and metrics vs pulse window",
    (y) => y.options(io),
    (a) => run(() => emit(a.out, renderSweep({ dir: a.in }))),
  )
  .command(
    "negativity",
    "mode-pair log negativity vs probe time with its plateau",
    (y) => y.options({
      ...io,
      pair: { type: "number", array: true, default: [1, 3], describe: "two 1-based modes" },
    }),
    (a) => run(() => {
      if (a.pair.length !== 2) throw new Error("--pair takes exactly two modes");
      emit(a.out, renderNegativity({ dir: a.in, pair: [a.pair[0], a.pair[1]] }));
    }),
  )
  .command(
    "trajectories",
    "fan of conditional means with the rms envelope",
    (y) => y.options({
      ...io,
      mode: { type: "number", default: 3, describe: "1-based mode number" },
      quadrature: { choices: ["x", "p"] as const, default: "x" as const },
      envelope: { type: "boolean", default: true },
    }),
    (a) => run(() => emit(a.out, renderTrajectories({
      dir: a.in, mode: a.mode, quadrature: a.quadrature, envelope: a.envelope,
    }))),
  )
  .demandCommand(1, "pick a figure kind")
  .strict()
  .help()
  .parse();
