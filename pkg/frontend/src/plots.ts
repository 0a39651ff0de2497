/** Figure kinds over the experiment CSV logs.
 *
 * Each builder turns parsed tables into the data series for one figure;
 * rendering is left to the SVG layer so the series themselves can be
 * asserted in tests.
 */

import { CsvError, Table, getColumn, getNonEmptyColumn } from "./csv.js";
import { histogram, movingAverage } from "./stats.js";
import {
  ChartOptions,
  HistSeries,
  Series,
  renderHistogramChart,
  renderLineChart,
} from "./svg.js";

export interface PlotSpec {
  kind: "training" | "constraint" | "sweep" | "histogram";
  inputs: string[];
  window: number;
  bins: number;
  output: string;
}

export const DEFAULT_WINDOW = 500;
export const DEFAULT_BINS = 10;

const BASELINE_LABELS: Record<string, string> = {
  equal: "Equal",
  random: "Random",
  wmmse: "WMMSE",
};

/** Training curves: smoothed policy sum-rate plus any baseline overlays. */
export function trainingSeries(
  training: Table,
  window: number,
  baselines?: Table,
): Series[] {
  const tau = getNonEmptyColumn(training, "tau");
  const series: Series[] = [
    {
      label: "Agg-GNN",
      x: tau,
      y: movingAverage(getNonEmptyColumn(training, "sumrate_obs"), window),
    },
  ];
  if (baselines) {
    const btau = getNonEmptyColumn(baselines, "tau");
    for (const [col, label] of Object.entries(BASELINE_LABELS)) {
      if (!baselines.data.has(col)) continue;
      series.push({ label, x: btau, y: movingAverage(getColumn(baselines, col), window) });
    }
    if (series.length === 1) {
      throw new CsvError(
        `baseline CSV has none of: ${Object.keys(BASELINE_LABELS).join(", ")}`,
      );
    }
  }
  return series;
}

/** Constraint trace: smoothed total power against the budget line. */
export function constraintSeries(training: Table, window: number): Series[] {
  const tau = getNonEmptyColumn(training, "tau");
  const power = getNonEmptyColumn(training, "power_obs");
  const violation = getNonEmptyColumn(training, "constraint_violation");
  // P_max is not logged directly but power - violation is constant-P_max
  const budget = power.map((p, i) => p - violation[i]);
  return [
    { label: "total power", x: tau, y: movingAverage(power, window) },
    { label: "budget", x: tau, y: budget },
  ];
}

/** Sweep curve: relative-to-WMMSE performance over the swept axis. */
export function sweepSeries(sweep: Table): Series[] {
  const value = getNonEmptyColumn(sweep, "value");
  return [
    { label: "Agg-GNN / WMMSE", x: value, y: getNonEmptyColumn(sweep, "relative") },
  ];
}

/** Transference histogram: per-trial sum-rate distribution per method. */
export function transferHistograms(transfer: Table, bins: number): HistSeries[] {
  const methods = ["agg", ...Object.keys(BASELINE_LABELS)].filter((c) =>
    transfer.data.has(c),
  );
  if (methods.length === 0) {
    throw new CsvError(
      `no method columns found; available: ${transfer.columns.join(", ")}`,
    );
  }
  // shared edges across methods so the overlaid bars are comparable
  const all = methods.flatMap((c) => getNonEmptyColumn(transfer, c));
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  return methods.map((c) => {
    const { edges, counts } = histogram(getNonEmptyColumn(transfer, c), bins, lo, hi);
    return { label: BASELINE_LABELS[c] ?? "Agg-GNN", edges, counts };
  });
}

export function renderFigure(spec: PlotSpec, tables: Table[]): string {
  const opts: ChartOptions = { xLabel: "iteration", yLabel: "sum of capacity" };
  switch (spec.kind) {
    case "training":
      return renderLineChart(trainingSeries(tables[0], spec.window, tables[1]), {
        ...opts,
        title: "Training performance",
      });
    case "constraint":
      return renderLineChart(constraintSeries(tables[0], spec.window), {
        ...opts,
        yLabel: "total transmit power",
        title: "Constraint satisfaction",
      });
    case "sweep":
      return renderLineChart(sweepSeries(tables[0]), {
        xLabel: "swept value",
        yLabel: "relative to WMMSE",
        title: "Sweep",
      });
    case "histogram":
      return renderHistogramChart(transferHistograms(tables[0], spec.bins), {
        xLabel: "sum of capacity",
        yLabel: "trials",
        title: "Transference",
      });
  }
}
