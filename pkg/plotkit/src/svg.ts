/**
 * Deterministic SVG chart primitives.
 *
 * Everything is plain markup built from the input numbers with fixed
 * formatting, so equal inputs always produce byte-identical files. No
 * fonts are embedded; text uses the viewer's sans-serif at fixed sizes.
 */

export const WIDTH = 800;
export const HEIGHT = 420;

const MARGIN = { left: 78, right: 24, top: 52, bottom: 58 };

export const CLASS_COLORS: Record<string, string> = {
  voice: "#1f77b4",
  video: "#d62728",
  database: "#2ca02c",
  ftp: "#9467bd",
};

export const PAIR_COLORS = ["#1f77b4", "#d62728"];

export interface Series {
  label: string;
  color: string;
  points: Array<[number, number]>;
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  /** Shade [0, warmupEndX] on the x axis and label it. */
  warmupEndX?: number;
  /** Extra annotation lines under the title (e.g. "voice: no samples"). */
  notes?: string[];
  xMax?: number;
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function px(v: number): string {
  return v.toFixed(2);
}

/** Tick step from the 1/2/5 ladder giving about `want` intervals. */
export function tickStep(max: number, want = 5): number {
  if (max <= 0) return 1;
  const rough = max / want;
  const power = Math.pow(10, Math.floor(Math.log10(rough)));
  for (const m of [1, 2, 5, 10]) {
    if (m * power >= rough) return m * power;
  }
  return 10 * power;
}

export function ticks(max: number, want = 5): number[] {
  const step = tickStep(max, want);
  const out: number[] = [];
  for (let v = 0; v <= max * (1 + 1e-9); v += step) out.push(v);
  return out;
}

function fmtTick(v: number, step: number): string {
  if (v === 0) return "0";
  const magnitude = Math.abs(v) >= 1e4 || step < 1e-3;
  if (magnitude) return v.toExponential(1).replace("e+", "e");
  const decimals = Math.max(0, -Math.floor(Math.log10(step)));
  return v.toFixed(Math.min(decimals, 6));
}

interface Frame {
  x(v: number): number;
  y(v: number): number;
  plotLeft: number;
  plotRight: number;
  plotTop: number;
  plotBottom: number;
}

function frameFor(xMax: number, yMax: number, top: number, height: number): Frame {
  const plotLeft = MARGIN.left;
  const plotRight = WIDTH - MARGIN.right;
  const plotTop = top + MARGIN.top;
  const plotBottom = top + height - MARGIN.bottom;
  return {
    x: (v) => plotLeft + (v / xMax) * (plotRight - plotLeft),
    y: (v) => plotBottom - (v / yMax) * (plotBottom - plotTop),
    plotLeft,
    plotRight,
    plotTop,
    plotBottom,
  };
}

function axes(f: Frame, xMax: number, yMax: number, opts: ChartOptions,
              xTickLabels?: Map<number, string>): string[] {
  const parts: string[] = [];
  const midX = (f.plotLeft + f.plotRight) / 2;
  const midY = (f.plotTop + f.plotBottom) / 2;
  parts.push(`<text x="${px(f.plotLeft)}" y="${px(f.plotTop - 26)}" font-size="15" font-weight="bold" fill="#222">${esc(opts.title)}</text>`);
  (opts.notes ?? []).forEach((note, i) => {
    parts.push(`<text x="${px(f.plotLeft)}" y="${px(f.plotTop - 10 + i * 0)}" font-size="11" fill="#888">${esc(note)}</text>`);
  });

  if (opts.warmupEndX && opts.warmupEndX > 0) {
    const w = f.x(Math.min(opts.warmupEndX, xMax)) - f.plotLeft;
    parts.push(`<rect x="${px(f.plotLeft)}" y="${px(f.plotTop)}" width="${px(w)}" height="${px(f.plotBottom - f.plotTop)}" fill="#cccccc" fill-opacity="0.35"/>`);
    parts.push(`<text x="${px(f.plotLeft + 4)}" y="${px(f.plotBottom - 6)}" font-size="10" fill="#777">warm-up</text>`);
  }

  const xStep = tickStep(xMax);
  const xs = xTickLabels ? [...xTickLabels.keys()] : ticks(xMax);
  for (const v of xs) {
    const gx = f.x(v);
    parts.push(`<line x1="${px(gx)}" y1="${px(f.plotBottom)}" x2="${px(gx)}" y2="${px(f.plotBottom + 5)}" stroke="#444"/>`);
    const label = xTickLabels ? xTickLabels.get(v)! : fmtTick(v, xStep);
    parts.push(`<text x="${px(gx)}" y="${px(f.plotBottom + 18)}" font-size="11" text-anchor="middle" fill="#444">${esc(label)}</text>`);
  }
  const yStep = tickStep(yMax);
  for (const v of ticks(yMax)) {
    const gy = f.y(v);
    parts.push(`<line x1="${px(f.plotLeft)}" y1="${px(gy)}" x2="${px(f.plotRight)}" y2="${px(gy)}" stroke="#e5e5e5"/>`);
    parts.push(`<text x="${px(f.plotLeft - 6)}" y="${px(gy + 4)}" font-size="11" text-anchor="end" fill="#444">${esc(fmtTick(v, yStep))}</text>`);
  }
  parts.push(`<line x1="${px(f.plotLeft)}" y1="${px(f.plotTop)}" x2="${px(f.plotLeft)}" y2="${px(f.plotBottom)}" stroke="#444"/>`);
  parts.push(`<line x1="${px(f.plotLeft)}" y1="${px(f.plotBottom)}" x2="${px(f.plotRight)}" y2="${px(f.plotBottom)}" stroke="#444"/>`);
  parts.push(`<text x="${px(midX)}" y="${px(f.plotBottom + 40)}" font-size="12" text-anchor="middle" fill="#222">${esc(opts.xLabel)}</text>`);
  parts.push(`<text x="18" y="${px(midY)}" font-size="12" text-anchor="middle" fill="#222" transform="rotate(-90 18 ${px(midY)})">${esc(opts.yLabel)}</text>`);
  return parts;
}

function legend(f: Frame, series: Series[]): string[] {
  const parts: string[] = [];
  series.forEach((s, i) => {
    const ly = f.plotTop + 8 + i * 16;
    const lx = f.plotRight - 150;
    parts.push(`<line x1="${px(lx)}" y1="${px(ly)}" x2="${px(lx + 22)}" y2="${px(ly)}" stroke="${s.color}" stroke-width="2"/>`);
    parts.push(`<text x="${px(lx + 28)}" y="${px(ly + 4)}" font-size="11" fill="#222">${esc(s.label)}</text>`);
  });
  return parts;
}

/** One line-chart panel as a <g> element spanning [top, top+height). */
export function linePanel(opts: ChartOptions, series: Series[], top = 0,
                          height = HEIGHT): string {
  const xMax = opts.xMax
    ?? Math.max(1, ...series.flatMap((s) => s.points.map((p) => p[0])));
  const yTop = Math.max(...series.flatMap((s) => s.points.map((p) => p[1])), 0);
  const yMax = yTop > 0 ? yTop * 1.08 : 1;
  const f = frameFor(xMax, yMax, top, height);
  const parts = [`<g>`];
  parts.push(...axes(f, xMax, yMax, opts));
  const drawn = series.filter((s) => s.points.length > 0);
  if (drawn.length === 0) {
    parts.push(`<text x="${px((f.plotLeft + f.plotRight) / 2)}" y="${px((f.plotTop + f.plotBottom) / 2)}" font-size="14" text-anchor="middle" fill="#888">no samples</text>`);
  }
  for (const s of drawn) {
    const coords = s.points.map(([x, y]) => `${px(f.x(x))},${px(f.y(y))}`);
    parts.push(`<polyline points="${coords.join(" ")}" fill="none" stroke="${s.color}" stroke-width="1.5"/>`);
  }
  parts.push(...legend(f, series));
  parts.push(`</g>`);
  return parts.join("\n");
}

export interface BarData {
  /** Category label, e.g. "1 KB". */
  label: string;
  /** null renders as a "no samples" gap. */
  value: number | null;
}

/** One bar-chart panel as a <g> element. */
export function barPanel(opts: ChartOptions, bars: BarData[], color: string,
                         top = 0, height = HEIGHT): string {
  const xMax = bars.length;
  const present = bars.filter((b) => b.value !== null).map((b) => b.value as number);
  const yTop = Math.max(...present, 0);
  const yMax = yTop > 0 ? yTop * 1.08 : 1;
  const f = frameFor(xMax, yMax, top, height);
  const centers = new Map<number, string>();
  bars.forEach((b, i) => centers.set(i + 0.5, b.label));
  const parts = [`<g>`];
  parts.push(...axes(f, xMax, yMax, opts, centers));
  if (present.length === 0) {
    parts.push(`<text x="${px((f.plotLeft + f.plotRight) / 2)}" y="${px((f.plotTop + f.plotBottom) / 2)}" font-size="14" text-anchor="middle" fill="#888">no samples</text>`);
  }
  bars.forEach((b, i) => {
    const cx = f.x(i + 0.5);
    const halfWidth = (f.x(1) - f.x(0)) * 0.32;
    if (b.value === null) {
      parts.push(`<text x="${px(cx)}" y="${px(f.plotBottom - 8)}" font-size="10" text-anchor="middle" fill="#888">no samples</text>`);
      return;
    }
    const topY = f.y(b.value);
    parts.push(`<rect x="${px(cx - halfWidth)}" y="${px(topY)}" width="${px(2 * halfWidth)}" height="${px(f.plotBottom - topY)}" fill="${color}" fill-opacity="0.85"/>`);
  });
  parts.push(`</g>`);
  return parts.join("\n");
}

export function svgDocument(panels: string[], totalHeight = HEIGHT): string {
  return [
    `<?xml version="1.0" encoding="UTF-8"?>`,
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${totalHeight}" viewBox="0 0 ${WIDTH} ${totalHeight}" font-family="sans-serif">`,
    `<rect width="${WIDTH}" height="${totalHeight}" fill="white"/>`,
    ...panels,
    `</svg>`,
    ``,
  ].join("\n");
}
