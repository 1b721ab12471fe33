/**
 * The five figure renderers. Each one loads its CSV, computes the
 * aggregates that will be written alongside the image, and assembles an
 * SVG string. Rendering is pure string building; nothing touches the
 * filesystem beyond reading the inputs.
 */

import {
  Aggregates,
  jct,
  jctFidelityAggregates,
  mcdmTradeoffAggregates,
  paretoFrontAggregates,
  qpuLoadAggregates,
  scalabilityAggregates,
} from "./aggregates.js";
import { loadFronts, loadQpuLoad, loadQueueTs, loadRecords } from "./tables.js";
import {
  COLORS,
  circleSvg,
  esc,
  extentPad,
  frameSvg,
  legendSvg,
  plotArea,
  polylineSvg,
  rectSvg,
  svgDoc,
} from "./svg.js";

export type FigureId =
  | "pareto_front"
  | "jct_fidelity_ts"
  | "qpu_load"
  | "scalability"
  | "mcdm_tradeoff";

export const FIGURE_IDS: readonly FigureId[] = [
  "pareto_front",
  "jct_fidelity_ts",
  "qpu_load",
  "scalability",
  "mcdm_tradeoff",
];

export interface RenderedFigure {
  svg: string;
  aggregates: Aggregates;
  sources: string[];
}

export function renderFigure(fig: string, inDir: string): RenderedFigure {
  switch (fig) {
    case "pareto_front":
      return paretoFront(inDir);
    case "jct_fidelity_ts":
      return jctFidelityTs(inDir);
    case "qpu_load":
      return qpuLoad(inDir);
    case "scalability":
      return scalability(inDir);
    case "mcdm_tradeoff":
      return mcdmTradeoff(inDir);
    default:
      throw new Error(`unknown figure id "${fig}" (expected one of ${FIGURE_IDS.join(", ")})`);
  }
}

// ---------------------------------------------------------------------------
// pareto_front: per-cycle front extents and the chosen point, objective plane

function paretoFront(inDir: string): RenderedFigure {
  const fronts = loadFronts(inDir);
  const agg = paretoFrontAggregates(fronts);
  const a = plotArea({
    xDomain: extentPad(fronts.flatMap((f) => [f.f1_min, f.f1_max])),
    yDomain: extentPad(fronts.flatMap((f) => [f.f2_min, f.f2_max])),
  });
  const parts = [
    frameSvg(a, {
      title: `Pareto front extents across ${fronts.length} scheduling cycles`,
      xLabel: "f1: mean completion time (s)",
      yLabel: "f2: mean error (1 - fidelity)",
    }),
  ];
  for (const f of fronts) {
    parts.push(rectSvg(a, f.f1_min, f.f2_min, f.f1_max, f.f2_max, {
      fill: COLORS.blue,
      stroke: COLORS.blue,
      opacity: 0.12,
    }));
  }
  for (const f of fronts) {
    parts.push(circleSvg(a, f.f1_chosen, f.f2_chosen, 3.5, COLORS.red, 0.9));
  }
  parts.push(circleSvg(a, agg.mean_f1_chosen, agg.mean_f2_chosen, 5.5, COLORS.green, 0.95));
  parts.push(legendSvg(a, [
    { label: "front extent (per cycle)", color: COLORS.blue },
    { label: "chosen point", color: COLORS.red },
    { label: "mean chosen point", color: COLORS.green },
  ]));
  return { svg: svgDoc(a.W, a.H, parts.join("\n")), aggregates: agg, sources: ["fronts.csv"] };
}

// ---------------------------------------------------------------------------
// jct_fidelity_ts: completion time and measured fidelity per finished job

function jctFidelityTs(inDir: string): RenderedFigure {
  const records = [...loadRecords(inDir)].sort((x, y) => x.finished - y.finished);
  const agg = jctFidelityAggregates(records);
  const jcts = records.map(jct);
  const a = plotArea({
    mr: 56,
    xDomain: extentPad(records.map((r) => r.finished)),
    yDomain: [0, Math.max(...jcts) * 1.08],
  });
  const parts = [
    frameSvg(a, {
      title: `Completion time and fidelity for ${records.length} jobs`,
      xLabel: "finish time (s)",
      yLabel: "job completion time (s)",
    }),
  ];
  // right axis carries fidelity on a fixed [0, 1] scale
  const rYOf = (v: number) => a.mt + a.ph - v * a.ph;
  for (const t of [0, 0.25, 0.5, 0.75, 1]) {
    const y = rYOf(t).toFixed(2);
    parts.push(
      `<text x="${a.ml + a.pw + 7}" y="${y}" font-size="10" text-anchor="start" dominant-baseline="middle" fill="${COLORS.green}">${t}</text>`
    );
  }
  parts.push(
    `<text x="${a.W - 12}" y="${a.mt + a.ph / 2}" font-size="11" text-anchor="middle" fill="${COLORS.green}" transform="rotate(90 ${a.W - 12} ${a.mt + a.ph / 2})">true fidelity</text>`
  );
  for (const r of records) {
    const cx = a.xOf(r.finished).toFixed(2);
    const cy = rYOf(r.true_fidelity).toFixed(2);
    parts.push(`<circle cx="${cx}" cy="${cy}" r="1.8" fill="${COLORS.green}" opacity="0.55"/>`);
  }
  parts.push(polylineSvg(a, records.map((r, i) => [r.finished, jcts[i]]), {
    color: COLORS.blue,
    width: 1.2,
  }));
  parts.push(polylineSvg(a, [[a.xMin, agg.mean_jct], [a.xMax, agg.mean_jct]], {
    color: COLORS.gray,
    width: 1,
    dash: "6,3",
  }));
  parts.push(legendSvg(a, [
    { label: "completion time", color: COLORS.blue },
    { label: `mean (${agg.mean_jct.toFixed(1)} s)`, color: COLORS.gray, dash: "6,3" },
    { label: "true fidelity (right)", color: COLORS.green },
  ]));
  return { svg: svgDoc(a.W, a.H, parts.join("\n")), aggregates: agg, sources: ["records.csv"] };
}

// ---------------------------------------------------------------------------
// qpu_load: utilization bars per device

function qpuLoad(inDir: string): RenderedFigure {
  const rows = loadQpuLoad(inDir);
  const agg = qpuLoadAggregates(rows);
  const yMax = Math.max(...rows.map((r) => r.utilization)) * 1.15 || 1;
  const a = plotArea({ xDomain: [0, rows.length], yDomain: [0, yMax], mb: 58 });
  const parts = [
    frameSvg(a, {
      title: `Per-QPU utilization, ${rows.length} devices`,
      xLabel: "",
      yLabel: "utilization (busy fraction)",
      xTicks: [],
      yFmt: (v) => `${(v * 100).toFixed(0)}%`,
    }),
  ];
  rows.forEach((r, i) => {
    parts.push(rectSvg(a, i + 0.12, 0, i + 0.88, r.utilization, { fill: COLORS.blue, opacity: 0.8 }));
    const xm = a.xOf(i + 0.5).toFixed(2);
    parts.push(
      `<text x="${xm}" y="${(a.yOf(r.utilization) - 4).toFixed(2)}" font-size="9" text-anchor="middle" fill="#333">${(r.utilization * 100).toFixed(1)}%</text>`
    );
    parts.push(
      `<text x="${xm}" y="${a.mt + a.ph + 14}" font-size="9" text-anchor="middle" fill="#333">${esc(r.qpu_id)}</text>`
    );
  });
  parts.push(
    `<text x="${a.ml + a.pw / 2}" y="${a.H - 10}" font-size="10" text-anchor="middle" fill="#555">load imbalance (max - min) / max over active runtime: ${(agg.load_imbalance * 100).toFixed(1)}%</text>`
  );
  return { svg: svgDoc(a.W, a.H, parts.join("\n")), aggregates: agg, sources: ["qpu_load.csv"] };
}

// ---------------------------------------------------------------------------
// scalability: pending queue depth over time

function scalability(inDir: string): RenderedFigure {
  const samples = loadQueueTs(inDir);
  const agg = scalabilityAggregates(samples);
  const a = plotArea({
    xDomain: extentPad(samples.map((s) => s.time)),
    yDomain: [0, agg.max_pending * 1.15 + 1],
  });
  // step trace: queue depth holds between scheduler triggers
  const steps: Array<[number, number]> = [];
  samples.forEach((s, i) => {
    if (i > 0) steps.push([s.time, samples[i - 1].pending_count]);
    steps.push([s.time, s.pending_count]);
  });
  const parts = [
    frameSvg(a, {
      title: `Pending queue depth over ${samples.length} scheduling cycles`,
      xLabel: "simulation time (s)",
      yLabel: "pending jobs",
    }),
    polylineSvg(a, [[a.xMin, agg.max_pending], [a.xMax, agg.max_pending]], {
      color: COLORS.red,
      width: 1,
      dash: "5,3",
    }),
    polylineSvg(a, steps, { color: COLORS.blue, width: 1.6 }),
  ];
  for (const s of samples) {
    parts.push(circleSvg(a, s.time, s.pending_count, 2.4, COLORS.blue));
  }
  parts.push(legendSvg(a, [
    { label: "pending at trigger", color: COLORS.blue },
    { label: `max (${agg.max_pending})`, color: COLORS.red, dash: "5,3" },
  ]));
  return { svg: svgDoc(a.W, a.H, parts.join("\n")), aggregates: agg, sources: ["queue_ts.csv"] };
}

// ---------------------------------------------------------------------------
// mcdm_tradeoff: where the chosen point sits inside each cycle's front

function mcdmTradeoff(inDir: string): RenderedFigure {
  const fronts = loadFronts(inDir);
  const agg = mcdmTradeoffAggregates(fronts);
  const a = plotArea({
    xDomain: extentPad(fronts.map((f) => f.cycle)),
    yDomain: [-0.05, 1.05],
  });
  const pos = (chosen: number, lo: number, hi: number) =>
    hi - lo > 0 ? (chosen - lo) / (hi - lo) : 0.5;
  const p1: Array<[number, number]> = fronts.map((f) => [f.cycle, pos(f.f1_chosen, f.f1_min, f.f1_max)]);
  const p2: Array<[number, number]> = fronts.map((f) => [f.cycle, pos(f.f2_chosen, f.f2_min, f.f2_max)]);
  const parts = [
    frameSvg(a, {
      title: "Chosen solution position within each Pareto front",
      xLabel: "scheduling cycle",
      yLabel: "position in front range (0 = min, 1 = max)",
      yTicks: [0, 0.25, 0.5, 0.75, 1],
    }),
    polylineSvg(a, [[a.xMin, agg.mean_f1_position], [a.xMax, agg.mean_f1_position]], {
      color: COLORS.blue,
      width: 1,
      dash: "6,3",
      opacity: 0.7,
    }),
    polylineSvg(a, [[a.xMin, agg.mean_f2_position], [a.xMax, agg.mean_f2_position]], {
      color: COLORS.orange,
      width: 1,
      dash: "6,3",
      opacity: 0.7,
    }),
    polylineSvg(a, p1, { color: COLORS.blue, width: 1.6 }),
    polylineSvg(a, p2, { color: COLORS.orange, width: 1.6 }),
  ];
  for (const [x, y] of p1) parts.push(circleSvg(a, x, y, 2.6, COLORS.blue));
  for (const [x, y] of p2) parts.push(circleSvg(a, x, y, 2.6, COLORS.orange));
  parts.push(legendSvg(a, [
    { label: "f1 (completion time)", color: COLORS.blue },
    { label: "f2 (error)", color: COLORS.orange },
    { label: "dashed: means", color: COLORS.gray, dash: "6,3" },
  ]));
  return { svg: svgDoc(a.W, a.H, parts.join("\n")), aggregates: agg, sources: ["fronts.csv"] };
}
