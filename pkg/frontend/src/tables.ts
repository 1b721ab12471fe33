/** Typed loaders for the four simulation output CSVs. */

import { CsvError, parseTable, TableSchema } from "./csv.js";

export interface JobRecord {
  job_id: string;
  arrival: number;
  scheduled: number;
  started: number;
  finished: number;
  qpu: string;
  est_fidelity: number;
  true_fidelity: number;
  est_time: number;
  true_time: number;
}

export interface QpuLoadRow {
  qpu_id: string;
  active_runtime: number;
  utilization: number;
}

export interface FrontRow {
  cycle: number;
  f1_min: number;
  f1_max: number;
  f2_min: number;
  f2_max: number;
  f1_chosen: number;
  f2_chosen: number;
}

export interface QueueSample {
  time: number;
  pending_count: number;
}

export const RECORDS_SCHEMA: TableSchema = {
  file: "records.csv",
  columns: [
    ["job_id", "string"],
    ["arrival", "number"],
    ["scheduled", "number"],
    ["started", "number"],
    ["finished", "number"],
    ["qpu", "string"],
    ["est_fidelity", "number"],
    ["true_fidelity", "number"],
    ["est_time", "number"],
    ["true_time", "number"],
  ],
};

export const QPU_LOAD_SCHEMA: TableSchema = {
  file: "qpu_load.csv",
  columns: [
    ["qpu_id", "string"],
    ["active_runtime", "number"],
    ["utilization", "number"],
  ],
};

export const FRONTS_SCHEMA: TableSchema = {
  file: "fronts.csv",
  columns: [
    ["cycle", "number"],
    ["f1_min", "number"],
    ["f1_max", "number"],
    ["f2_min", "number"],
    ["f2_max", "number"],
    ["f1_chosen", "number"],
    ["f2_chosen", "number"],
  ],
};

export const QUEUE_TS_SCHEMA: TableSchema = {
  file: "queue_ts.csv",
  columns: [
    ["time", "number"],
    ["pending_count", "number"],
  ],
};

function requireRows<T>(rows: T[], file: string): T[] {
  // nothing to draw from a header-only file; refusing here keeps the
  // renderers from ever writing an image for an empty run
  if (rows.length === 0) {
    throw new CsvError(`${file}: no data rows`);
  }
  return rows;
}

export function loadRecords(dir: string): JobRecord[] {
  return requireRows(parseTable(dir, RECORDS_SCHEMA) as unknown as JobRecord[], "records.csv");
}

export function loadQpuLoad(dir: string): QpuLoadRow[] {
  return requireRows(parseTable(dir, QPU_LOAD_SCHEMA) as unknown as QpuLoadRow[], "qpu_load.csv");
}

export function loadFronts(dir: string): FrontRow[] {
  return requireRows(parseTable(dir, FRONTS_SCHEMA) as unknown as FrontRow[], "fronts.csv");
}

export function loadQueueTs(dir: string): QueueSample[] {
  return requireRows(parseTable(dir, QUEUE_TS_SCHEMA) as unknown as QueueSample[], "queue_ts.csv");
}
