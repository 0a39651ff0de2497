/** Command-line figure tool.
 *
 * Usage:
 *   plot --kind training  --input training_log.csv [--input baseline_log.csv]
 *        [--window 500] --output fig.svg
 *   plot --kind constraint --input training_log.csv [--window 500] --output fig.svg
 *   plot --kind sweep      --input sweep_hops.csv --output fig.svg
 *   plot --kind histogram  --input transfer.csv [--bins 10] --output fig.svg
 *
 * Exits 1 with a descriptive message on missing columns, empty data or
 * malformed flags.
 */

import { readFileSync, writeFileSync } from "fs";
import { parseCsv } from "./csv.js";
import { DEFAULT_BINS, DEFAULT_WINDOW, PlotSpec, renderFigure } from "./plots.js";

const KINDS = ["training", "constraint", "sweep", "histogram"] as const;

export function parseArgs(argv: string[]): PlotSpec {
  const spec: PlotSpec = {
    kind: "training",
    inputs: [],
    window: DEFAULT_WINDOW,
    bins: DEFAULT_BINS,
    output: "",
  };
  let kindSet = false;
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[++i];
    if (value === undefined) {
      throw new Error(`flag ${flag} needs a value`);
    }
    switch (flag) {
      case "--kind":
        if (!(KINDS as readonly string[]).includes(value)) {
          throw new Error(`unknown kind ${value}; expected one of ${KINDS.join(", ")}`);
        }
        spec.kind = value as PlotSpec["kind"];
        kindSet = true;
        break;
      case "--input":
        spec.inputs.push(value);
        break;
      case "--window":
        spec.window = Number(value);
        break;
      case "--bins":
        spec.bins = Number(value);
        break;
      case "--output":
        spec.output = value;
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!kindSet) throw new Error("--kind is required");
  if (spec.inputs.length === 0) throw new Error("at least one --input is required");
  if (spec.output === "") throw new Error("--output is required");
  if (!Number.isInteger(spec.window) || spec.window < 1) {
    throw new Error(`--window must be a positive integer, got ${spec.window}`);
  }
  if (!Number.isInteger(spec.bins) || spec.bins < 1) {
    throw new Error(`--bins must be a positive integer, got ${spec.bins}`);
  }
  return spec;
}

export function run(argv: string[]): void {
  const spec = parseArgs(argv);
  const tables = spec.inputs.map((p) => parseCsv(readFileSync(p, "utf8")));
  writeFileSync(spec.output, renderFigure(spec, tables));
  console.log(`wrote ${spec.output}`);
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.ts") || entry.endsWith("cli.js")) {
  try {
    run(process.argv.slice(2));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}
