/**
 * CSV loading with strict schema checks.
 *
 * Every input file must carry exactly the documented header, in order is
 * not required but no column may be missing or unexpected; numeric cells
 * must parse as finite numbers. Violations raise CsvError naming the
 * offending column so a renamed or dropped field is caught before any
 * drawing starts.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import Papa from "papaparse";

export class CsvError extends Error {}

export type ColumnKind = "string" | "number";

export interface TableSchema {
  file: string;
  columns: Array<[name: string, kind: ColumnKind]>;
}

export type Row = Record<string, string | number>;

/** Parse `dir/<schema.file>` and validate it against the schema. */
export function parseTable(dir: string, schema: TableSchema): Row[] {
  const path = join(dir, schema.file);
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch {
    throw new CsvError(`${schema.file}: not found under ${dir}`);
  }

  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    delimiter: ",",
    skipEmptyLines: true,
  });
  // a short row surfaces as TooFewFields; the per-cell check below names
  // the column instead, so only structural parse errors are fatal here
  const fatal = parsed.errors.filter((e) => e.code !== "TooFewFields");
  if (fatal.length > 0) {
    const e = fatal[0];
    throw new CsvError(`${schema.file}: ${e.message} (row ${e.row})`);
  }

  const fields = parsed.meta.fields ?? [];
  const expected = schema.columns.map(([name]) => name);
  for (const name of expected) {
    if (!fields.includes(name)) {
      throw new CsvError(`${schema.file}: missing column "${name}"`);
    }
  }
  for (const name of fields) {
    if (!expected.includes(name)) {
      throw new CsvError(`${schema.file}: unexpected column "${name}"`);
    }
  }

  return parsed.data.map((raw, i) => {
    const row: Row = {};
    for (const [name, kind] of schema.columns) {
      const cell = raw[name];
      if (cell === undefined || cell === "") {
        throw new CsvError(`${schema.file}: empty cell in column "${name}" (data row ${i})`);
      }
      if (kind === "string") {
        row[name] = cell;
      } else {
        const v = Number(cell);
        if (!Number.isFinite(v)) {
          throw new CsvError(
            `${schema.file}: non-numeric value ${JSON.stringify(cell)} in column "${name}" (data row ${i})`
          );
        }
        row[name] = v;
      }
    }
    return row;
  });
}
