/** Hand-rolled SVG emission for line charts and histograms.
 *
 * The output is a pure function of the data series: identical input
 * produces a byte-identical SVG string, which the regression tests rely
 * on.  No styling framework, just axes, ticks, polylines and rects.
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export interface ChartOptions {
  width?: number;
  height?: number;
  xLabel?: string;
  yLabel?: string;
  title?: string;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const MARGIN = { top: 36, right: 24, bottom: 48, left: 64 };

interface Scale {
  (v: number): number;
}

function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

function niceTicks(lo: number, hi: number, n = 6): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function fmt(v: number): string {
  return Math.abs(v) >= 1e5 || (v !== 0 && Math.abs(v) < 1e-3)
    ? v.toExponential(1)
    : String(Number(v.toPrecision(6)));
}

function frame(
  width: number,
  height: number,
  sx: Scale,
  sy: Scale,
  xTicks: number[],
  yTicks: number[],
  opts: ChartOptions,
): string[] {
  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;
  const parts: string[] = [];
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333"/>`,
  );
  for (const t of xTicks) {
    const px = sx(t).toFixed(2);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${px}" y="${y0 + 18}" font-size="11" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const py = sy(t).toFixed(2);
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`,
    );
  }
  if (opts.xLabel) {
    parts.push(
      `<text x="${(x0 + x1) / 2}" y="${height - 10}" font-size="12" text-anchor="middle">${opts.xLabel}</text>`,
    );
  }
  if (opts.yLabel) {
    const cy = (y0 + y1) / 2;
    parts.push(
      `<text x="16" y="${cy}" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${cy})">${opts.yLabel}</text>`,
    );
  }
  if (opts.title) {
    parts.push(
      `<text x="${(x0 + x1) / 2}" y="20" font-size="13" text-anchor="middle">${opts.title}</text>`,
    );
  }
  return parts;
}

function open(width: number, height: number): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">` +
    `<rect width="${width}" height="${height}" fill="white"/>`
  );
}

export function renderLineChart(series: Series[], opts: ChartOptions = {}): string {
  if (series.length === 0) {
    throw new Error("no series to plot");
  }
  const width = opts.width ?? 720;
  const height = opts.height ?? 440;
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y);
  if (xs.length === 0) {
    throw new Error("series contain no points");
  }
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = Math.min(...ys);
  const yHi = Math.max(...ys);
  const pad = (yHi - yLo || 1) * 0.05;
  const sx = linearScale(xLo, xHi, MARGIN.left, width - MARGIN.right);
  const sy = linearScale(yLo - pad, yHi + pad, height - MARGIN.bottom, MARGIN.top);
  const parts = [open(width, height)];
  parts.push(
    ...frame(width, height, sx, sy, niceTicks(xLo, xHi), niceTicks(yLo - pad, yHi + pad), opts),
  );
  series.forEach((s, k) => {
    if (s.x.length !== s.y.length) {
      throw new Error(`series ${s.label}: x/y length mismatch`);
    }
    const pts = s.x.map((x, i) => `${sx(x).toFixed(2)},${sy(s.y[i]).toFixed(2)}`).join(" ");
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${PALETTE[k % PALETTE.length]}" stroke-width="1.5"/>`,
    );
    const ly = MARGIN.top + 16 + 16 * k;
    const lx = width - MARGIN.right - 140;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" stroke="${PALETTE[k % PALETTE.length]}" stroke-width="2"/>`,
    );
    parts.push(`<text x="${lx + 28}" y="${ly}" font-size="11">${s.label}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n");
}

export interface HistSeries {
  label: string;
  edges: number[];
  counts: number[];
}

export function renderHistogramChart(series: HistSeries[], opts: ChartOptions = {}): string {
  if (series.length === 0) {
    throw new Error("no series to plot");
  }
  const width = opts.width ?? 720;
  const height = opts.height ?? 440;
  const xLo = Math.min(...series.map((s) => s.edges[0]));
  const xHi = Math.max(...series.map((s) => s.edges[s.edges.length - 1]));
  const yHi = Math.max(...series.flatMap((s) => s.counts));
  const sx = linearScale(xLo, xHi, MARGIN.left, width - MARGIN.right);
  const sy = linearScale(0, yHi * 1.05 || 1, height - MARGIN.bottom, MARGIN.top);
  const parts = [open(width, height)];
  parts.push(
    ...frame(width, height, sx, sy, niceTicks(xLo, xHi), niceTicks(0, yHi), opts),
  );
  series.forEach((s, k) => {
    if (s.counts.length !== s.edges.length - 1) {
      throw new Error(`series ${s.label}: counts/edges length mismatch`);
    }
    const color = PALETTE[k % PALETTE.length];
    for (let i = 0; i < s.counts.length; i++) {
      const x = sx(s.edges[i]);
      const w = sx(s.edges[i + 1]) - x;
      const y = sy(s.counts[i]);
      const h = sy(0) - y;
      parts.push(
        `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" ` +
          `fill="${color}" fill-opacity="0.45" stroke="${color}"/>`,
      );
    }
    const ly = MARGIN.top + 16 + 16 * k;
    const lx = width - MARGIN.right - 140;
    parts.push(
      `<rect x="${lx}" y="${ly - 10}" width="22" height="10" fill="${color}" fill-opacity="0.45" stroke="${color}"/>`,
    );
    parts.push(`<text x="${lx + 28}" y="${ly}" font-size="11">${s.label}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n");
}
