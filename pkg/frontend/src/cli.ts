#!/usr/bin/env node
/**
 * render --fig <id> --in DIR --out DIR
 *
 * Reads the simulation CSVs from --in, writes <id>.svg and <id>.json to
 * --out. Exit codes: 0 success, 2 usage errors, 1 anything else (missing
 * file, schema mismatch, empty input).
 */

import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { CsvError } from "./csv.js";
import { FIGURE_IDS } from "./figures.js";
import { renderToFiles } from "./render.js";

const USAGE = `usage: render --fig <id> --in DIR --out DIR
  --fig   one of: ${FIGURE_IDS.join(", ")}
  --in    directory holding the simulation CSVs
  --out   directory for the SVG and companion JSON`;

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        fig: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
      allowPositionals: true,
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  if (parsed.values.help) {
    console.log(USAGE);
    return 0;
  }
  // tolerate the interface being spelled with its own name up front,
  // as in `node cli.js render --fig ...`
  const positionals = parsed.positionals.filter((p) => p !== "render");
  if (positionals.length > 0) {
    console.error(`error: unexpected argument ${JSON.stringify(positionals[0])}`);
    console.error(USAGE);
    return 2;
  }
  const { fig, in: inDir, out: outDir } = parsed.values;
  if (!fig || !inDir || !outDir) {
    console.error("error: --fig, --in and --out are all required");
    console.error(USAGE);
    return 2;
  }
  if (!(FIGURE_IDS as readonly string[]).includes(fig)) {
    console.error(`error: unknown figure id "${fig}" (expected one of ${FIGURE_IDS.join(", ")})`);
    return 2;
  }
  try {
    const res = renderToFiles(fig, inDir, outDir);
    console.log(`wrote ${res.svgPath}`);
    console.log(`wrote ${res.jsonPath}`);
    return 0;
  } catch (err) {
    if (err instanceof CsvError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
