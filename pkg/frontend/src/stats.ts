/** Series statistics used by the figures: smoothing and binning. */

/**
 * Trailing moving average with a growing window at the start, so the
 * output has the same length as the input and matches the smoothing the
 * training logs report: out[i] = mean(values[max(0, i-n+1) .. i]).
 */
export function movingAverage(values: number[], window: number): number[] {
  if (window < 1 || !Number.isInteger(window)) {
    throw new Error(`window must be a positive integer, got ${window}`);
  }
  const out: number[] = [];
  let sum = 0;
  for (let i = 0; i < values.length; i++) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out.push(sum / Math.min(i + 1, window));
  }
  return out;
}

export interface HistogramResult {
  /** bin edges, length bins + 1, uniform over [lo, hi] */
  edges: number[];
  /** per-bin counts; the last bin includes its upper edge */
  counts: number[];
}

export function histogram(
  values: number[],
  bins: number,
  lo?: number,
  hi?: number,
): HistogramResult {
  if (bins < 1 || !Number.isInteger(bins)) {
    throw new Error(`bins must be a positive integer, got ${bins}`);
  }
  if (values.length === 0) {
    throw new Error("cannot bin an empty series");
  }
  let min = lo ?? Math.min(...values);
  let max = hi ?? Math.max(...values);
  if (min === max) {
    // degenerate range: widen symmetrically so the single value lands
    // in the middle bin rather than dividing by zero
    min -= 0.5;
    max += 0.5;
  }
  const width = (max - min) / bins;
  const edges = Array.from({ length: bins + 1 }, (_, i) => min + i * width);
  const counts = new Array(bins).fill(0);
  for (const v of values) {
    if (v < min || v > max) continue;
    const idx = Math.min(Math.floor((v - min) / width), bins - 1);
    counts[idx] += 1;
  }
  return { edges, counts };
}
