/**
 * Minimal deterministic SVG toolkit: linear scales, tick generation,
 * a dark-to-bright sequential color map, and a tag-string document
 * builder.  No timestamps, no randomness — identical inputs yield
 * byte-identical documents.
 */

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

/** Linear map from `domain` to `range`; a degenerate domain maps to the
 *  range midpoint so flat data still renders. */
export function linScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  const f = (v: number): number =>
    span === 0 ? (r0 + r1) / 2 : r0 + ((v - d0) / span) * (r1 - r0);
  const scale = f as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

/** Round-valued axis ticks covering [lo, hi] (nice-number stepping). */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return [];
  if (lo === hi) return [lo];
  if (lo > hi) [lo, hi] = [hi, lo];
  const rawStep = (hi - lo) / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const norm = rawStep / mag;
  const step = (norm >= 5 ? 10 : norm >= 2 ? 5 : norm >= 1 ? 2 : 1) * mag;
  const ticks: number[] = [];
  const start = Math.ceil(lo / step) * step;
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    // snap to the step grid to avoid float drift in labels
    ticks.push(Number((Math.round(v / step) * step).toPrecision(12)));
  }
  return ticks;
}

/** Escape text for use inside SVG elements and attributes. */
export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Compact deterministic number formatting for SVG attributes. */
export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  const r = Math.round(v * 100) / 100;
  return Object.is(r, -0) ? "0" : String(r);
}

/** Human-oriented tick label: trims float noise, keeps short decimals. */
export function label(v: number): string {
  if (!Number.isFinite(v)) return String(v);
  const r = Number(v.toPrecision(10));
  return String(r);
}

// Anchor stops of a perceptually uniform dark-violet-to-yellow map
// (viridis), sampled at t = 0, 1/8, …, 1.
const MAP_STOPS: Array<[number, number, number]> = [
  [68, 1, 84],
  [70, 50, 127],
  [54, 92, 141],
  [39, 127, 142],
  [33, 145, 140],
  [53, 183, 121],
  [94, 201, 98],
  [170, 220, 50],
  [253, 231, 37],
];

/** Sequential color map on [0, 1] (clamped); returns `#rrggbb`. */
export function colorMap(t: number): string {
  const u = Math.min(1, Math.max(0, t));
  const pos = u * (MAP_STOPS.length - 1);
  const i = Math.min(MAP_STOPS.length - 2, Math.floor(pos));
  const frac = pos - i;
  const a = MAP_STOPS[i]!;
  const b = MAP_STOPS[i + 1]!;
  const channel = (k: 0 | 1 | 2): string =>
    Math.round(a[k] + (b[k] - a[k]) * frac)
      .toString(16)
      .padStart(2, "0");
  return `#${channel(0)}${channel(1)}${channel(2)}`;
}

/** Distinguishable stroke colors for line traces, cycled by index. */
export const TRACE_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
] as const;

export function traceColor(i: number): string {
  return TRACE_COLORS[i % TRACE_COLORS.length]!;
}

/** Accumulates SVG elements and renders a standalone document. */
export class SvgDoc {
  private parts: string[] = [];

  raw(tag: string): this {
    this.parts.push(tag);
    return this;
  }

  rect(
    x: number,
    y: number,
    w: number,
    h: number,
    attrs: Record<string, string> = {},
  ): this {
    return this.raw(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(Math.max(0, w))}" height="${fmt(Math.max(0, h))}"${attrString(attrs)}/>`,
    );
  }

  line(
    x1: number,
    y1: number,
    x2: number,
    y2: number,
    attrs: Record<string, string> = {},
  ): this {
    return this.raw(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}"${attrString(attrs)}/>`,
    );
  }

  /** Polyline through (xs[i], ys[i]); non-finite points split the line. */
  polyline(
    xs: ArrayLike<number>,
    ys: ArrayLike<number>,
    attrs: Record<string, string> = {},
  ): this {
    const segments: string[][] = [];
    let current: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      const x = xs[i]!;
      const y = ys[i]!;
      if (Number.isFinite(x) && Number.isFinite(y)) {
        current.push(`${fmt(x)},${fmt(y)}`);
      } else if (current.length > 0) {
        segments.push(current);
        current = [];
      }
    }
    if (current.length > 0) segments.push(current);
    for (const seg of segments) {
      if (seg.length < 2) continue;
      this.raw(
        `<polyline points="${seg.join(" ")}" fill="none"${attrString(attrs)}/>`,
      );
    }
    return this;
  }

  text(
    x: number,
    y: number,
    content: string,
    attrs: Record<string, string> = {},
  ): this {
    return this.raw(
      `<text x="${fmt(x)}" y="${fmt(y)}"${attrString(attrs)}>${esc(content)}</text>`,
    );
  }

  open(tag: string, attrs: Record<string, string> = {}): this {
    return this.raw(`<${tag}${attrString(attrs)}>`);
  }

  close(tag: string): this {
    return this.raw(`</${tag}>`);
  }

  render(width: number, height: number): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${fmt(width)}" height="${fmt(height)}" ` +
      `viewBox="0 0 ${fmt(width)} ${fmt(height)}" font-family="Helvetica, Arial, sans-serif">\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function attrString(attrs: Record<string, string>): string {
  const keys = Object.keys(attrs);
  if (keys.length === 0) return "";
  return keys.map((k) => ` ${k}="${esc(attrs[k]!)}"`).join("");
}

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

/** Shared axis drawing: frame, ticks, labels, optional grid lines. */
export function drawAxes(
  doc: SvgDoc,
  xScale: Scale,
  yScale: Scale,
  opts: {
    xLabel?: string;
    yLabel?: string;
    xTicks?: number[];
    yTicks?: number[];
    grid?: boolean;
  } = {},
): void {
  const [x0, x1] = xScale.range;
  const [y0, y1] = yScale.range; // y0 = bottom pixel, y1 = top pixel
  const xTicks = opts.xTicks ?? niceTicks(xScale.domain[0], xScale.domain[1]);
  const yTicks = opts.yTicks ?? niceTicks(yScale.domain[0], yScale.domain[1]);

  if (opts.grid !== false) {
    for (const t of xTicks) {
      doc.line(xScale(t), y0, xScale(t), y1, {
        stroke: "#e0e0e0",
        "stroke-width": "0.5",
      });
    }
    for (const t of yTicks) {
      doc.line(x0, yScale(t), x1, yScale(t), {
        stroke: "#e0e0e0",
        "stroke-width": "0.5",
      });
    }
  }
  doc.rect(x0, y1, x1 - x0, y0 - y1, {
    fill: "none",
    stroke: "#333333",
    "stroke-width": "1",
  });
  for (const t of xTicks) {
    doc.line(xScale(t), y0, xScale(t), y0 + 4, { stroke: "#333333" });
    doc.text(xScale(t), y0 + 16, label(t), {
      "text-anchor": "middle",
      "font-size": "10",
      fill: "#333333",
    });
  }
  for (const t of yTicks) {
    doc.line(x0 - 4, yScale(t), x0, yScale(t), { stroke: "#333333" });
    doc.text(x0 - 6, yScale(t) + 3, label(t), {
      "text-anchor": "end",
      "font-size": "10",
      fill: "#333333",
    });
  }
  if (opts.xLabel) {
    doc.text((x0 + x1) / 2, y0 + 32, opts.xLabel, {
      "text-anchor": "middle",
      "font-size": "11",
      fill: "#333333",
    });
  }
  if (opts.yLabel) {
    const ym = (y0 + y1) / 2;
    doc.raw(
      `<text x="${fmt(x0 - 38)}" y="${fmt(ym)}" text-anchor="middle" font-size="11" fill="#333333" ` +
        `transform="rotate(-90 ${fmt(x0 - 38)} ${fmt(ym)})">${esc(opts.yLabel)}</text>`,
    );
  }
}
