/**
 * Batch renderer: loads a bundle (or single run directory), renders the
 * full figure set into an output directory, and writes a provenance
 * manifest.  The input directories are never written to.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join, relative } from "node:path";
import {
  loadBundle,
  loadRun,
  physicalParams,
  type Bundle,
  type RunOutputs,
} from "./bundle.js";
import {
  renderCoolantFigure,
  renderHeatFigure,
  renderHeatmapFigure,
  renderSocFigure,
  renderTemperatureFigure,
  SpecError,
} from "./figures.js";
import {
  manifestJson,
  sha256File,
  sha256Text,
  type FigureRecord,
  type Manifest,
} from "./manifest.js";

export interface RenderOptions {
  /** Absolute unsafe temperature (K); defaults to t_desired + h_max. */
  unsafeThreshold?: number;
  /** Extra run directory drawn as a dashed reference on the SOC figure. */
  baselineDir?: string;
}

export interface RenderResult {
  outDir: string;
  bundleDir: string;
  figures: string[];
  manifestPath: string;
}

function sourceHashes(bundle: Bundle, extra: RunOutputs[]): Array<{
  path: string;
  sha256: string;
}> {
  const files: string[] = [];
  if (bundle.comparison !== null) {
    files.push(join(bundle.dir, "comparison.json"));
  }
  for (const run of [...bundle.runs, ...extra]) {
    files.push(join(run.dir, "trajectory.csv"));
    files.push(join(run.dir, "summary.json"));
  }
  return files.map((f) => ({
    path: relative(bundle.dir, f) || f,
    sha256: sha256File(f),
  }));
}

/** Render heatmap, temperature, coolant, SOC and heat figures plus
 *  manifest.json; returns the written paths. */
export function renderAll(
  bundleDir: string,
  outDir: string,
  opts: RenderOptions = {},
): RenderResult {
  const bundle = loadBundle(bundleDir);
  const runs = bundle.runs;
  const params = physicalParams(runs[0]!);
  const threshold = opts.unsafeThreshold ?? params.t_desired + params.h_max;
  if (!(threshold > 0)) {
    throw new SpecError(`unsafe threshold must be > 0 K, got ${threshold}`);
  }
  const baseline =
    opts.baselineDir === undefined ? undefined : loadRun(opts.baselineDir);

  const scenarioName =
    bundle.comparison?.scenario?.name ??
    (typeof runs[0]!.summary.metadata?.name === "string"
      ? (runs[0]!.summary.metadata.name as string)
      : "run");

  const figures: Array<{ file: string; kind: string; svg: string }> = [
    {
      file: "heatmap.svg",
      kind: "heatmap",
      svg: renderHeatmapFigure(runs, {
        title: `Temperature field T(x, t) — ${scenarioName}`,
        unsafeThreshold: threshold,
      }),
    },
    {
      file: "temperatures.svg",
      kind: "timeseries",
      svg: renderTemperatureFigure(runs, threshold, {
        title: `Boundary and mid-section temperatures — ${scenarioName}`,
      }),
    },
    {
      file: "coolant.svg",
      kind: "timeseries",
      svg: renderCoolantFigure(runs, {
        title: `Coolant commands — ${scenarioName}`,
      }),
    },
    {
      file: "soc.svg",
      kind: "timeseries",
      svg: renderSocFigure(runs, {
        title: `State of charge — ${scenarioName}`,
        baseline,
      }),
    },
    {
      file: "heat.svg",
      kind: "timeseries",
      svg: renderHeatFigure(runs, {
        title: `Heat input and control effort — ${scenarioName}`,
      }),
    },
  ];

  mkdirSync(outDir, { recursive: true });
  const sources = sourceHashes(bundle, baseline === undefined ? [] : [baseline]);
  const records: FigureRecord[] = [];
  const written: string[] = [];
  for (const fig of figures) {
    const path = join(outDir, fig.file);
    writeFileSync(path, fig.svg, "utf8");
    written.push(path);
    records.push({
      file: fig.file,
      kind: fig.kind,
      sha256: sha256Text(fig.svg),
      sources,
    });
  }
  const manifest: Manifest = { bundle: bundleDir, figures: records };
  const manifestPath = join(outDir, "manifest.json");
  writeFileSync(manifestPath, manifestJson(manifest), "utf8");

  return { outDir, bundleDir, figures: written, manifestPath };
}
