import { describe, expect, it } from "vitest";
import {
  chosenPosition,
  jctFidelityAggregates,
  mcdmTradeoffAggregates,
  paretoFrontAggregates,
  qpuLoadAggregates,
  scalabilityAggregates,
} from "../src/aggregates.js";
import { mean, percentile } from "../src/stats.js";
import { FrontRow, JobRecord, QpuLoadRow } from "../src/tables.js";

describe("stats", () => {
  it("mean", () => {
    expect(mean([1, 2, 3])).toBe(2);
    expect(() => mean([])).toThrow();
  });

  it("percentile interpolates linearly between order statistics", () => {
    // rank (4 - 1) * 0.95 = 2.85 -> 3 + 0.85 * (4 - 3)
    expect(percentile([1, 2, 3, 4], 95)).toBeCloseTo(3.85, 12);
    // rank (8 - 1) * 0.95 = 6.65 on sorted [1,1,2,3,4,5,6,9]
    expect(percentile([3, 1, 4, 1, 5, 9, 2, 6], 95)).toBeCloseTo(7.95, 12);
    expect(percentile([5], 95)).toBe(5);
    expect(percentile([7, 3], 0)).toBe(3);
    expect(percentile([7, 3], 100)).toBe(7);
    expect(() => percentile([1], 101)).toThrow();
  });
});

function rec(partial: Partial<JobRecord>): JobRecord {
  return {
    job_id: "j",
    arrival: 0,
    scheduled: 0,
    started: 0,
    finished: 1,
    qpu: "q",
    est_fidelity: 0.9,
    true_fidelity: 0.9,
    est_time: 1,
    true_time: 1,
    ...partial,
  };
}

describe("per-figure aggregates", () => {
  it("jct uses finish minus arrival", () => {
    const records = [
      rec({ arrival: 0, finished: 10, est_fidelity: 0.8, true_fidelity: 0.7 }),
      rec({ arrival: 5, finished: 35, est_fidelity: 0.6, true_fidelity: 0.5 }),
    ];
    const agg = jctFidelityAggregates(records);
    expect(agg.jobs).toBe(2);
    expect(agg.mean_jct).toBe(20);
    expect(agg.p95_jct).toBeCloseTo(10 + 0.95 * 20, 12);
    expect(agg.mean_est_fidelity).toBeCloseTo(0.7, 12);
    expect(agg.mean_true_fidelity).toBeCloseTo(0.6, 12);
  });

  it("load imbalance is (max - min) / max over active runtime", () => {
    const rows: QpuLoadRow[] = [
      { qpu_id: "a", active_runtime: 10, utilization: 0.1 },
      { qpu_id: "b", active_runtime: 40, utilization: 0.4 },
    ];
    const agg = qpuLoadAggregates(rows);
    expect(agg.qpus).toBe(2);
    expect(agg.load_imbalance).toBeCloseTo(0.75, 12);
    expect(agg.total_active_runtime).toBe(50);
    expect(agg.mean_utilization).toBeCloseTo(0.25, 12);
  });

  it("all-idle cluster reports zero imbalance", () => {
    const rows: QpuLoadRow[] = [
      { qpu_id: "a", active_runtime: 0, utilization: 0 },
      { qpu_id: "b", active_runtime: 0, utilization: 0 },
    ];
    expect(qpuLoadAggregates(rows).load_imbalance).toBe(0);
  });

  it("queue aggregates", () => {
    const agg = scalabilityAggregates([
      { time: 60, pending_count: 3 },
      { time: 120, pending_count: 7 },
      { time: 180, pending_count: 5 },
    ]);
    expect(agg.samples).toBe(3);
    expect(agg.mean_pending).toBe(5);
    expect(agg.max_pending).toBe(7);
    expect(agg.final_pending).toBe(5);
  });

  it("front means", () => {
    const fronts: FrontRow[] = [
      { cycle: 0, f1_min: 1, f1_max: 3, f2_min: 0.1, f2_max: 0.3, f1_chosen: 2, f2_chosen: 0.2 },
      { cycle: 1, f1_min: 2, f1_max: 6, f2_min: 0.2, f2_max: 0.4, f1_chosen: 4, f2_chosen: 0.3 },
    ];
    const agg = paretoFrontAggregates(fronts);
    expect(agg.cycles).toBe(2);
    expect(agg.mean_f1_min).toBe(1.5);
    expect(agg.mean_f1_max).toBe(4.5);
    expect(agg.mean_f1_chosen).toBe(3);
    expect(agg.mean_f2_chosen).toBeCloseTo(0.25, 12);
  });

  it("chosen position pins single-point fronts at 0.5", () => {
    expect(chosenPosition(2, 1, 3)).toBe(0.5);
    expect(chosenPosition(1, 1, 3)).toBe(0);
    expect(chosenPosition(3, 1, 3)).toBe(1);
    expect(chosenPosition(5, 5, 5)).toBe(0.5);
  });

  it("tradeoff aggregates on a degenerate and a regular cycle", () => {
    const fronts: FrontRow[] = [
      { cycle: 0, f1_min: 10, f1_max: 20, f2_min: 0.1, f2_max: 0.2, f1_chosen: 15, f2_chosen: 0.1 },
      { cycle: 1, f1_min: 8, f1_max: 8, f2_min: 0.3, f2_max: 0.3, f1_chosen: 8, f2_chosen: 0.3 },
    ];
    const agg = mcdmTradeoffAggregates(fronts);
    expect(agg.cycles).toBe(2);
    expect(agg.mean_f1_position).toBe(0.5); // (0.5 + 0.5) / 2
    expect(agg.mean_f2_position).toBe(0.25); // (0.0 + 0.5) / 2
    expect(agg.mean_jct_cut_pct).toBeCloseTo((25 + 0) / 2, 12);
    expect(agg.mean_error_gap_pts).toBe(0);
  });
});
