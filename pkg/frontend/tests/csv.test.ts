import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { CsvError, parseTable } from "../src/csv.js";
import {
  FRONTS_SCHEMA,
  loadFronts,
  loadQpuLoad,
  loadQueueTs,
  loadRecords,
  RECORDS_SCHEMA,
} from "../src/tables.js";

const FIXTURE = fileURLToPath(new URL("./fixtures/baseline/", import.meta.url));

function tmpDirWith(files: Record<string, string>): string {
  const dir = mkdtempSync(join(tmpdir(), "figcsv-"));
  for (const [name, text] of Object.entries(files)) {
    writeFileSync(join(dir, name), text);
  }
  return dir;
}

describe("baseline fixture loads", () => {
  it("records.csv parses into typed rows", () => {
    const rows = loadRecords(FIXTURE);
    expect(rows.length).toBe(293);
    for (const r of rows) {
      expect(typeof r.job_id).toBe("string");
      expect(typeof r.qpu).toBe("string");
      expect(r.scheduled).toBeGreaterThanOrEqual(r.arrival);
      expect(r.started).toBeGreaterThanOrEqual(r.scheduled);
      expect(r.finished).toBeGreaterThan(r.started);
      expect(r.true_fidelity).toBeGreaterThan(0);
      expect(r.true_fidelity).toBeLessThanOrEqual(1);
    }
  });

  it("fronts.csv rows keep chosen inside the extent", () => {
    const rows = loadFronts(FIXTURE);
    expect(rows.length).toBe(15);
    for (const f of rows) {
      expect(f.f1_min).toBeLessThanOrEqual(f.f1_chosen);
      expect(f.f1_chosen).toBeLessThanOrEqual(f.f1_max);
      expect(f.f2_min).toBeLessThanOrEqual(f.f2_chosen);
      expect(f.f2_chosen).toBeLessThanOrEqual(f.f2_max);
    }
  });

  it("qpu_load.csv has one row per device", () => {
    const rows = loadQpuLoad(FIXTURE);
    expect(rows.length).toBe(8);
    for (const r of rows) {
      expect(r.utilization).toBeGreaterThanOrEqual(0);
      expect(r.utilization).toBeLessThanOrEqual(1);
      expect(r.active_runtime).toBeGreaterThanOrEqual(0);
    }
  });

  it("queue_ts.csv times are strictly increasing", () => {
    const rows = loadQueueTs(FIXTURE);
    expect(rows.length).toBe(15);
    for (let i = 1; i < rows.length; i++) {
      expect(rows[i].time).toBeGreaterThan(rows[i - 1].time);
    }
  });
});

describe("schema violations", () => {
  it("missing column is named", () => {
    const dir = tmpDirWith({
      "records.csv":
        "job_id,arrival,scheduled,started,finished,qpu,estfid,true_fidelity,est_time,true_time\n" +
        "j0,0,1,1,2,q0,0.9,0.9,1,1\n",
    });
    expect(() => loadRecords(dir)).toThrow(CsvError);
    expect(() => loadRecords(dir)).toThrow(/missing column "est_fidelity"/);
  });

  it("unexpected column is named", () => {
    const dir = tmpDirWith({
      "queue_ts.csv": "time,pending_count,bogus\n60.0,3,x\n",
    });
    expect(() => loadQueueTs(dir)).toThrow(/unexpected column "bogus"/);
  });

  it("non-numeric cell names its column and row", () => {
    const dir = tmpDirWith({
      "fronts.csv":
        "cycle,f1_min,f1_max,f2_min,f2_max,f1_chosen,f2_chosen\n" +
        "0,abc,2.0,0.1,0.2,1.5,0.15\n",
    });
    expect(() => loadFronts(dir)).toThrow(/non-numeric value "abc" in column "f1_min" \(data row 0\)/);
  });

  it("short row reads as an empty cell", () => {
    const dir = tmpDirWith({
      "queue_ts.csv": "time,pending_count\n60.0\n",
    });
    expect(() => loadQueueTs(dir)).toThrow(/empty cell in column "pending_count"/);
  });

  it("zero-byte file reports the first missing column", () => {
    const dir = tmpDirWith({ "records.csv": "" });
    expect(() => loadRecords(dir)).toThrow(/missing column "job_id"/);
  });

  it("missing file names the directory", () => {
    const dir = tmpDirWith({});
    expect(() => loadFronts(dir)).toThrow(/fronts.csv: not found/);
  });

  it("header-only file parses to zero rows, loaders refuse it", () => {
    const header = FRONTS_SCHEMA.columns.map(([n]) => n).join(",") + "\n";
    const dir = tmpDirWith({ "fronts.csv": header });
    expect(parseTable(dir, FRONTS_SCHEMA)).toEqual([]);
    expect(() => loadFronts(dir)).toThrow(/fronts.csv: no data rows/);
  });

  it("column order does not matter", () => {
    const dir = tmpDirWith({
      "queue_ts.csv": "pending_count,time\n3,60.0\n",
    });
    const rows = loadQueueTs(dir);
    expect(rows[0].time).toBe(60);
    expect(rows[0].pending_count).toBe(3);
  });
});
