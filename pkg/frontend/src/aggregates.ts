/**
 * Numeric aggregates written next to each figure.
 *
 * Every figure's companion JSON holds exactly the numbers plotted or
 * annotated, so downstream checks can recompute them from the raw CSVs
 * without parsing any SVG. Definitions that admit more than one reading
 * are pinned in the function comments.
 */

import { FrontRow, JobRecord, QpuLoadRow, QueueSample } from "./tables.js";
import { extent, mean, percentile } from "./stats.js";

export type Aggregates = Record<string, number>;

export function paretoFrontAggregates(fronts: FrontRow[]): Aggregates {
  return {
    cycles: fronts.length,
    mean_f1_min: mean(fronts.map((f) => f.f1_min)),
    mean_f1_max: mean(fronts.map((f) => f.f1_max)),
    mean_f1_chosen: mean(fronts.map((f) => f.f1_chosen)),
    mean_f2_min: mean(fronts.map((f) => f.f2_min)),
    mean_f2_max: mean(fronts.map((f) => f.f2_max)),
    mean_f2_chosen: mean(fronts.map((f) => f.f2_chosen)),
  };
}

/** Completion time of one job: finish minus arrival. */
export function jct(r: JobRecord): number {
  return r.finished - r.arrival;
}

export function jctFidelityAggregates(records: JobRecord[]): Aggregates {
  const jcts = records.map(jct);
  return {
    jobs: records.length,
    mean_jct: mean(jcts),
    p95_jct: percentile(jcts, 95),
    mean_est_fidelity: mean(records.map((r) => r.est_fidelity)),
    mean_true_fidelity: mean(records.map((r) => r.true_fidelity)),
  };
}

/**
 * load_imbalance is (max - min) / max over active_runtime, matching the
 * simulator's own aggregate so the two outputs can be cross-checked.
 */
export function qpuLoadAggregates(rows: QpuLoadRow[]): Aggregates {
  const loads = rows.map((r) => r.active_runtime);
  const [lo, hi] = extent(loads);
  return {
    qpus: rows.length,
    total_active_runtime: loads.reduce((a, b) => a + b, 0),
    mean_utilization: mean(rows.map((r) => r.utilization)),
    load_imbalance: hi > 0 ? (hi - lo) / hi : 0,
  };
}

export function scalabilityAggregates(samples: QueueSample[]): Aggregates {
  const counts = samples.map((s) => s.pending_count);
  return {
    samples: samples.length,
    mean_pending: mean(counts),
    max_pending: extent(counts)[1],
    final_pending: counts[counts.length - 1],
  };
}

/**
 * Chosen-point position within a front extent, per objective: 0 sits at the
 * front minimum, 1 at the maximum. A single-point front has no extent, so
 * its position is pinned at 0.5 (the chosen point is both extremes at once).
 */
export function chosenPosition(chosen: number, lo: number, hi: number): number {
  const range = hi - lo;
  return range > 0 ? (chosen - lo) / range : 0.5;
}

export function mcdmTradeoffAggregates(fronts: FrontRow[]): Aggregates {
  const p1 = fronts.map((f) => chosenPosition(f.f1_chosen, f.f1_min, f.f1_max));
  const p2 = fronts.map((f) => chosenPosition(f.f2_chosen, f.f2_min, f.f2_max));
  // sacrifice relative to the slowest front point; error gap in fidelity points
  const cut = fronts.map((f) => (f.f1_max > 0 ? ((f.f1_max - f.f1_chosen) / f.f1_max) * 100 : 0));
  const gap = fronts.map((f) => (f.f2_chosen - f.f2_min) * 100);
  return {
    cycles: fronts.length,
    mean_f1_position: mean(p1),
    mean_f2_position: mean(p2),
    mean_jct_cut_pct: mean(cut),
    mean_error_gap_pts: mean(gap),
  };
}
