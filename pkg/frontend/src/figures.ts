/**
 * Figure builders over loaded run outputs.
 *
 * Every figure is split into a pure *model* builder (numbers in, numbers
 * out — what the tests assert on) and an SVG emitter that turns the model
 * into markup.  All output is deterministic.
 */

import { physicalParams, type RunOutputs } from "./bundle.js";
import { scalarColumn } from "./csv.js";
import {
  SvgDoc,
  colorMap,
  drawAxes,
  fmt,
  label,
  linScale,
  niceTicks,
  traceColor,
} from "./svg.js";

export class SpecError extends Error {
  override name = "SpecError";
}

export type FigureKind = "heatmap" | "timeseries" | "comparison";

export interface FigureSpec {
  kind: FigureKind;
  /** Run directories the figure reads; nonempty. */
  inputs: string[];
  /** Absolute temperature above which the module is unsafe; > 0 K. */
  unsafeThreshold: number;
  /** Target image path. */
  output: string;
}

const FIGURE_KINDS: ReadonlySet<string> = new Set([
  "heatmap",
  "timeseries",
  "comparison",
]);

export function validateSpec(spec: FigureSpec): void {
  if (!FIGURE_KINDS.has(spec.kind)) {
    throw new SpecError(`unknown figure kind: ${String(spec.kind)}`);
  }
  if (!Array.isArray(spec.inputs) || spec.inputs.length === 0) {
    throw new SpecError("inputs must be a nonempty list of run directories");
  }
  if (!(spec.unsafeThreshold > 0)) {
    throw new SpecError(
      `unsafe threshold must be > 0 K, got ${spec.unsafeThreshold}`,
    );
  }
  if (typeof spec.output !== "string" || spec.output.length === 0) {
    throw new SpecError("output path must be a nonempty string");
  }
}

const CONTROLLER_LABELS: Record<string, string> = {
  oc: "open loop",
  stc: "stability-only feedback",
  stsfc: "stability and safety feedback",
};

function runLabel(name: string): string {
  const desc = CONTROLLER_LABELS[name];
  return desc === undefined ? name : `${name} — ${desc}`;
}

/** Marker-friendly time text: tenths of a second, no trailing zero. */
function timeLabel(v: number): string {
  return String(Number(v.toFixed(1)));
}

// --- heatmap -----------------------------------------------------------------

export interface HeatmapPanel {
  name: string;
  /** Downsampled sample times (s). */
  times: number[];
  /** Downsampled node positions (m). */
  xs: number[];
  /** Absolute temperature (K); cells[ti][xi]. */
  cells: number[][];
}

export interface HeatmapModel {
  panels: HeatmapPanel[];
  /** Shared color-scale bounds across all panels (K). */
  tMin: number;
  tMax: number;
  length: number;
  tDesired: number;
}

export interface HeatmapOptions {
  /** Cap on time samples per panel (stride-decimated). */
  maxTimeSamples?: number;
  /** Cap on spatial samples per panel. */
  maxSpaceSamples?: number;
}

function strideIndices(n: number, cap: number): number[] {
  const stride = Math.max(1, Math.ceil(n / cap));
  const idx: number[] = [];
  for (let i = 0; i < n; i += stride) idx.push(i);
  return idx;
}

/** Shared-scale absolute-temperature cells for each run. */
export function buildHeatmapModel(
  runs: RunOutputs[],
  opts: HeatmapOptions = {},
): HeatmapModel {
  if (runs.length === 0) throw new SpecError("heatmap needs at least one run");
  const maxT = opts.maxTimeSamples ?? 200;
  const maxX = opts.maxSpaceSamples ?? 120;
  const first = physicalParams(runs[0]!);

  const panels: HeatmapPanel[] = [];
  let tMin = Number.POSITIVE_INFINITY;
  let tMax = Number.NEGATIVE_INFINITY;
  for (const run of runs) {
    const p = physicalParams(run);
    const { times, fields, nNodes } = run.table;
    const ti = strideIndices(times.length, maxT);
    const xi = strideIndices(nNodes, maxX);
    const dx = p.length / (nNodes - 1);
    const cells: number[][] = [];
    for (const i of ti) {
      const row: number[] = [];
      const sample = fields[i]!;
      for (const k of xi) {
        const v = p.t_desired + sample[k]!;
        row.push(v);
        if (Number.isFinite(v)) {
          if (v < tMin) tMin = v;
          if (v > tMax) tMax = v;
        }
      }
      cells.push(row);
    }
    panels.push({
      name: run.name,
      times: ti.map((i) => times[i]!),
      xs: xi.map((k) => k * dx),
      cells,
    });
  }
  if (!(tMax > tMin)) {
    // flat field (e.g. exact equilibrium): give the scale a visible extent
    const mid = Number.isFinite(tMin) ? tMin : first.t_desired;
    tMin = mid - 0.5;
    tMax = mid + 0.5;
  }
  return { panels, tMin, tMax, length: first.length, tDesired: first.t_desired };
}

export interface HeatmapRenderOptions extends HeatmapOptions {
  title?: string;
  unsafeThreshold?: number;
}

/** Space-time temperature map, one panel per run, shared color scale. */
export function renderHeatmapFigure(
  runs: RunOutputs[],
  opts: HeatmapRenderOptions = {},
): string {
  const model = buildHeatmapModel(runs, opts);
  const plotW = 230;
  const plotH = 220;
  const gap = 26;
  const marginLeft = 64;
  const marginTop = 48;
  const marginBottom = 52;
  const barGap = 18;
  const barW = 14;
  const barLabels = 46;
  const n = model.panels.length;
  const width =
    marginLeft + n * plotW + (n - 1) * gap + barGap + barW + barLabels + 8;
  const height = marginTop + plotH + marginBottom;

  const doc = new SvgDoc();
  doc.rect(0, 0, width, height, { fill: "#ffffff" });
  doc.text(width / 2, 20, opts.title ?? "Temperature field T(x, t)", {
    "text-anchor": "middle",
    "font-size": "14",
    fill: "#111111",
  });

  // 64 quantized levels (the colorbar's own resolution); quantizing also
  // lets the run-length merge below collapse visually-flat regions
  const colorAt = (v: number): string => {
    const t = (v - model.tMin) / (model.tMax - model.tMin);
    return colorMap(Math.round(Math.min(1, Math.max(0, t)) * 63) / 63);
  };

  model.panels.forEach((panel, pi) => {
    const px = marginLeft + pi * (plotW + gap);
    const py = marginTop;
    const nT = panel.cells.length;
    const nX = panel.cells[0]!.length;
    const cw = plotW / nT;
    const ch = plotH / nX;
    // run-length merge along time keeps flat regions compact
    for (let k = 0; k < nX; k++) {
      let i = 0;
      while (i < nT) {
        const fill = colorAt(panel.cells[i]![k]!);
        let j = i + 1;
        while (j < nT && colorAt(panel.cells[j]![k]!) === fill) j++;
        doc.rect(
          px + i * cw,
          py + plotH - (k + 1) * ch,
          (j - i) * cw + 0.5,
          ch + 0.5,
          { fill },
        );
        i = j;
      }
    }
    const tEnd = panel.times[panel.times.length - 1]!;
    const xScale = linScale([0, tEnd], [px, px + plotW]);
    const yScale = linScale([0, model.length], [py + plotH, py]);
    drawAxes(doc, xScale, yScale, {
      xLabel: "time (s)",
      yLabel: pi === 0 ? "position x (m)" : undefined,
      grid: false,
      xTicks: niceTicks(0, tEnd, 4),
    });
    doc.text(px + plotW / 2, marginTop - 8, runLabel(panel.name), {
      "text-anchor": "middle",
      "font-size": "11",
      fill: "#111111",
    });
  });

  // colorbar on the shared scale
  const bx = marginLeft + n * plotW + (n - 1) * gap + barGap;
  const by = marginTop;
  const steps = 64;
  for (let s = 0; s < steps; s++) {
    const t0 = s / steps;
    doc.rect(
      bx,
      by + plotH - (s + 1) * (plotH / steps),
      barW,
      plotH / steps + 0.5,
      { fill: colorMap(t0 + 0.5 / steps) },
    );
  }
  doc.rect(bx, by, barW, plotH, {
    fill: "none",
    stroke: "#333333",
    "stroke-width": "1",
  });
  for (const tv of niceTicks(model.tMin, model.tMax, 5)) {
    const yy =
      by + plotH - ((tv - model.tMin) / (model.tMax - model.tMin)) * plotH;
    doc.line(bx + barW, yy, bx + barW + 4, yy, { stroke: "#333333" });
    doc.text(bx + barW + 6, yy + 3, label(tv), {
      "font-size": "10",
      fill: "#333333",
    });
  }
  const thr = opts.unsafeThreshold;
  if (thr !== undefined && thr >= model.tMin && thr <= model.tMax) {
    const yy =
      by + plotH - ((thr - model.tMin) / (model.tMax - model.tMin)) * plotH;
    doc.line(bx - 4, yy, bx + barW + 4, yy, {
      stroke: "#d62728",
      "stroke-width": "1.5",
    });
    doc.text(bx + barW + 6, yy - 6, "unsafe", {
      "font-size": "9",
      fill: "#d62728",
    });
  }
  doc.text(bx + barW / 2, by + plotH + 18, "T (K)", {
    "text-anchor": "middle",
    "font-size": "10",
    fill: "#333333",
  });

  return doc.render(width, height);
}

// --- temperature traces ------------------------------------------------------

export interface TemperatureSeries {
  name: string;
  times: Float64Array;
  /** Absolute temperature at x = 0, L/2, L (K). */
  boundary0: Float64Array;
  midpoint: Float64Array;
  boundaryL: Float64Array;
  /** True when any of the three traces exceeds the threshold. */
  enteredUnsafe: boolean;
  /** First unsafe time reported by the run summary, if any. */
  firstUnsafe: number | null;
}

export interface TemperatureModel {
  threshold: number;
  tDesired: number;
  series: TemperatureSeries[];
}

export function buildTemperatureModel(
  runs: RunOutputs[],
  threshold: number,
): TemperatureModel {
  if (runs.length === 0) {
    throw new SpecError("temperature figure needs at least one run");
  }
  if (!(threshold > 0)) {
    throw new SpecError(`unsafe threshold must be > 0 K, got ${threshold}`);
  }
  const tDesired = physicalParams(runs[0]!).t_desired;
  const series = runs.map((run): TemperatureSeries => {
    const p = physicalParams(run);
    const { times, fields, nNodes } = run.table;
    const mid = Math.floor(nNodes / 2);
    const pick = (k: number): Float64Array => {
      const out = new Float64Array(times.length);
      for (let i = 0; i < times.length; i++) {
        out[i] = p.t_desired + fields[i]![k]!;
      }
      return out;
    };
    const boundary0 = pick(0);
    const midpoint = pick(mid);
    const boundaryL = pick(nNodes - 1);
    let entered = false;
    for (let i = 0; i < times.length && !entered; i++) {
      entered =
        boundary0[i]! > threshold ||
        midpoint[i]! > threshold ||
        boundaryL[i]! > threshold;
    }
    return {
      name: run.name,
      times,
      boundary0,
      midpoint,
      boundaryL,
      enteredUnsafe: entered,
      firstUnsafe: run.summary.metrics.first_unsafe_time_s,
    };
  });
  return { threshold, tDesired, series };
}

interface PanelTrace {
  label: string;
  ys: ArrayLike<number>;
  color: string;
  dash?: string;
  /** Trace-specific time axis (defaults to the panel's). */
  times?: ArrayLike<number>;
}

interface Panel {
  title: string;
  times: ArrayLike<number>;
  traces: PanelTrace[];
  /** Vertical marker positions (s) with labels. */
  vMarks?: Array<{ t: number; label: string }>;
}

/**
 * Indices that decimate a trace to at most `cap` points while keeping the
 * exact envelope: each bucket contributes its minimum and maximum sample
 * (in time order), so peaks survive decimation.
 */
export function decimateIndices(ys: ArrayLike<number>, cap: number): number[] {
  const n = ys.length;
  if (n <= cap) {
    const all: number[] = [];
    for (let i = 0; i < n; i++) all.push(i);
    return all;
  }
  const buckets = Math.max(1, Math.floor(cap / 2));
  const idx: number[] = [0];
  for (let b = 0; b < buckets; b++) {
    const lo = Math.floor((b * n) / buckets);
    const hi = Math.min(n, Math.floor(((b + 1) * n) / buckets));
    let iMin = lo;
    let iMax = lo;
    for (let i = lo; i < hi; i++) {
      const v = ys[i]!;
      if (!Number.isFinite(v)) {
        idx.push(i); // keep gaps so the polyline still splits
        continue;
      }
      if (v < ys[iMin]! || !Number.isFinite(ys[iMin]!)) iMin = i;
      if (v > ys[iMax]! || !Number.isFinite(ys[iMax]!)) iMax = i;
    }
    if (iMin === iMax) idx.push(iMin);
    else idx.push(Math.min(iMin, iMax), Math.max(iMin, iMax));
  }
  idx.push(n - 1);
  // strictly increasing, deduplicated
  const out: number[] = [];
  for (const i of idx.sort((a, b) => a - b)) {
    if (out.length === 0 || i > out[out.length - 1]!) out.push(i);
  }
  return out;
}

/** Generic stacked-panel line chart used by all trace figures. */
function renderPanels(
  panels: Panel[],
  opts: {
    title: string;
    yLabel: string;
    /** Shade above this y value (absolute units). */
    shadeAbove?: number;
    shadeLabel?: string;
    /** Horizontal reference line. */
    hLine?: { y: number; label: string };
    yPad?: number;
  },
): string {
  const plotW = 560;
  const plotH = 140;
  const marginLeft = 70;
  const marginRight = 150;
  const marginTop = 46;
  const panelGap = 48;
  const marginBottom = 48;
  const n = panels.length;
  const width = marginLeft + plotW + marginRight;
  const height =
    marginTop + n * plotH + (n - 1) * panelGap + marginBottom;

  // shared y domain over every trace, the shading threshold and reference line
  let lo = Number.POSITIVE_INFINITY;
  let hi = Number.NEGATIVE_INFINITY;
  let tEnd = 0;
  for (const panel of panels) {
    for (const trace of panel.traces) {
      const times = trace.times ?? panel.times;
      const last = times[times.length - 1];
      if (typeof last === "number" && last > tEnd) tEnd = last;
      for (let i = 0; i < trace.ys.length; i++) {
        const v = trace.ys[i]!;
        if (!Number.isFinite(v)) continue;
        if (v < lo) lo = v;
        if (v > hi) hi = v;
      }
    }
  }
  if (!(hi >= lo)) {
    lo = 0;
    hi = 1;
  }
  if (opts.shadeAbove !== undefined) {
    lo = Math.min(lo, opts.shadeAbove);
    hi = Math.max(hi, opts.shadeAbove);
  }
  if (opts.hLine !== undefined) {
    lo = Math.min(lo, opts.hLine.y);
    hi = Math.max(hi, opts.hLine.y);
  }
  const pad = (hi - lo || 1) * (opts.yPad ?? 0.08);
  lo -= pad;
  hi += pad;

  const doc = new SvgDoc();
  doc.rect(
    0,
    0,
    width,
    height,
    { fill: "#ffffff" },
  );
  doc.text(width / 2, 20, opts.title, {
    "text-anchor": "middle",
    "font-size": "14",
    fill: "#111111",
  });

  panels.forEach((panel, pi) => {
    const py = marginTop + pi * (plotH + panelGap);
    const xScale = linScale([0, tEnd], [marginLeft, marginLeft + plotW]);
    const yScale = linScale([lo, hi], [py + plotH, py]);

    if (opts.shadeAbove !== undefined) {
      const yThr = yScale(opts.shadeAbove);
      doc.rect(marginLeft, py, plotW, Math.max(0, yThr - py), {
        fill: "#bbbbbb",
        "fill-opacity": "0.35",
      });
      doc.line(marginLeft, yThr, marginLeft + plotW, yThr, {
        stroke: "#d62728",
        "stroke-width": "1",
        "stroke-dasharray": "5 3",
      });
      if (pi === 0 && opts.shadeLabel) {
        doc.text(marginLeft + plotW - 6, yThr - 5, opts.shadeLabel, {
          "text-anchor": "end",
          "font-size": "9",
          fill: "#a00000",
        });
      }
    }
    if (opts.hLine !== undefined) {
      const yy = yScale(opts.hLine.y);
      doc.line(marginLeft, yy, marginLeft + plotW, yy, {
        stroke: "#555555",
        "stroke-width": "1",
        "stroke-dasharray": "3 3",
      });
      if (pi === 0) {
        doc.text(marginLeft + 6, yy - 4, opts.hLine.label, {
          "font-size": "9",
          fill: "#555555",
        });
      }
    }

    drawAxes(doc, xScale, yScale, {
      xLabel: pi === n - 1 ? "time (s)" : undefined,
      yLabel: opts.yLabel,
      grid: true,
    });
    doc.text(marginLeft, py - 8, panel.title, {
      "font-size": "11",
      fill: "#111111",
    });

    for (const mark of panel.vMarks ?? []) {
      const xx = xScale(mark.t);
      doc.line(xx, py, xx, py + plotH, {
        stroke: "#333333",
        "stroke-width": "1",
        "stroke-dasharray": "2 3",
      });
      doc.text(xx + 4, py + 12, mark.label, {
        "font-size": "9",
        fill: "#333333",
      });
    }

    panel.traces.forEach((trace) => {
      const times = trace.times ?? panel.times;
      const keep = decimateIndices(trace.ys, 1200);
      const ysPix = new Float64Array(keep.length);
      const xsPix = new Float64Array(keep.length);
      keep.forEach((srcIdx, i) => {
        xsPix[i] = xScale(times[srcIdx]!);
        ysPix[i] = Number.isFinite(trace.ys[srcIdx]!)
          ? yScale(trace.ys[srcIdx]!)
          : Number.NaN;
      });
      const attrs: Record<string, string> = {
        stroke: trace.color,
        "stroke-width": "1.5",
      };
      if (trace.dash) attrs["stroke-dasharray"] = trace.dash;
      doc.polyline(xsPix, ysPix, attrs);
    });

    // legend to the right of the panel
    panel.traces.forEach((trace, li) => {
      const lx = marginLeft + plotW + 14;
      const ly = py + 12 + li * 16;
      doc.line(lx, ly - 4, lx + 18, ly - 4, {
        stroke: trace.color,
        "stroke-width": "2",
        ...(trace.dash ? { "stroke-dasharray": trace.dash } : {}),
      });
      doc.text(lx + 24, ly, trace.label, {
        "font-size": "10",
        fill: "#333333",
      });
    });
  });

  return doc.render(width, height);
}

/** Boundary and mid-section temperatures per run, unsafe band shaded. */
export function renderTemperatureFigure(
  runs: RunOutputs[],
  threshold: number,
  opts: { title?: string } = {},
): string {
  const model = buildTemperatureModel(runs, threshold);
  const panels: Panel[] = model.series.map((s) => ({
    title: runLabel(s.name),
    times: s.times,
    traces: [
      { label: "T(0, t)", ys: s.boundary0, color: traceColor(0) },
      { label: "T(L/2, t)", ys: s.midpoint, color: traceColor(1) },
      { label: "T(L, t)", ys: s.boundaryL, color: traceColor(2) },
    ],
    vMarks:
      s.firstUnsafe === null
        ? []
        : [{ t: s.firstUnsafe, label: `unsafe at ${timeLabel(s.firstUnsafe)} s` }],
  }));
  return renderPanels(panels, {
    title: opts.title ?? "Boundary and mid-section temperatures",
    yLabel: "T (K)",
    shadeAbove: model.threshold,
    shadeLabel: `unsafe above ${label(model.threshold)} K`,
  });
}

// --- coolant -----------------------------------------------------------------

/** Commanded coolant temperatures at both boundaries, one panel per run. */
export function renderCoolantFigure(
  runs: RunOutputs[],
  opts: { title?: string; floor?: number } = {},
): string {
  if (runs.length === 0) {
    throw new SpecError("coolant figure needs at least one run");
  }
  const panels: Panel[] = runs.map((run) => ({
    title: runLabel(run.name),
    times: run.table.times,
    traces: [
      {
        label: "coolant at x = 0",
        ys: scalarColumn(run.table, "T_c1"),
        color: traceColor(0),
      },
      {
        label: "coolant at x = L",
        ys: scalarColumn(run.table, "T_c2"),
        color: traceColor(1),
      },
    ],
  }));
  return renderPanels(panels, {
    title: opts.title ?? "Coolant commands at the two boundaries",
    yLabel: "T_c (K)",
    hLine:
      opts.floor === undefined
        ? undefined
        : { y: opts.floor, label: `floor ${label(opts.floor)} K` },
  });
}

// --- state of charge ----------------------------------------------------------

export interface SocModel {
  series: Array<{ name: string; times: Float64Array; soc: Float64Array }>;
  /** First reported zero-crossing time among the runs, if any. */
  crossing: number | null;
}

export function buildSocModel(
  runs: RunOutputs[],
  baseline?: RunOutputs,
): SocModel {
  if (runs.length === 0) throw new SpecError("SOC figure needs at least one run");
  const series = runs.map((run) => ({
    name: run.name,
    times: run.table.times,
    soc: scalarColumn(run.table, "soc"),
  }));
  if (baseline !== undefined) {
    series.push({
      name: `${baseline.name} (baseline)`,
      times: baseline.table.times,
      soc: scalarColumn(baseline.table, "soc"),
    });
  }
  let crossing: number | null = null;
  for (const run of runs) {
    const c = run.summary.metrics.soc_zero_crossing_s;
    if (c !== null && c !== undefined) {
      crossing = c;
      break;
    }
  }
  return { series, crossing };
}

/** State of charge over time with a zero-crossing marker when present. */
export function renderSocFigure(
  runs: RunOutputs[],
  opts: { title?: string; baseline?: RunOutputs } = {},
): string {
  const model = buildSocModel(runs, opts.baseline);
  const first = model.series[0]!;
  const panel: Panel = {
    title: "",
    times: first.times,
    traces: model.series.map((s, i) => ({
      label: s.name,
      times: s.times,
      ys: s.soc,
      color: traceColor(i),
      dash: s.name.endsWith("(baseline)") ? "6 3" : undefined,
    })),
    vMarks:
      model.crossing === null
        ? []
        : [
            {
              t: model.crossing,
              label: `SOC = 0 at ${timeLabel(model.crossing)} s`,
            },
          ],
  };
  return renderPanels([panel], {
    title: opts.title ?? "State of charge",
    yLabel: "SOC (fraction)",
    hLine: { y: 0, label: "depleted" },
  });
}

// --- heat input and control effort --------------------------------------------

/** Spatial norms of the heat input and the command magnitude per run. */
export function renderHeatFigure(
  runs: RunOutputs[],
  opts: { title?: string } = {},
): string {
  if (runs.length === 0) {
    throw new SpecError("heat figure needs at least one run");
  }
  const first = runs[0]!;
  const inputPanel: Panel = {
    title: "heat input norm",
    times: first.table.times,
    traces: runs.map((run, i) => ({
      label: run.name,
      ys: scalarColumn(run.table, "norm_D"),
      color: traceColor(i),
    })),
  };
  const commandPanel: Panel = {
    title: "coolant command magnitude",
    times: first.table.times,
    traces: runs.map((run, i) => ({
      label: run.name,
      ys: scalarColumn(run.table, "norm_u"),
      color: traceColor(i),
    })),
  };
  return renderPanels([inputPanel, commandPanel], {
    title: opts.title ?? "Heat input and control effort",
    yLabel: "norm (K/s)",
  });
}
