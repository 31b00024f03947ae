/**
 * Loaders for simulator output directories.
 *
 * A *run directory* holds `trajectory.csv` + `summary.json` (one
 * controller, one scenario).  A *comparison bundle* holds
 * `comparison.json` plus one run directory per controller.  Loading is
 * strictly read-only; nothing here writes into the input directories.
 */

import { existsSync, readFileSync } from "node:fs";
import { basename, join } from "node:path";
import { parseTrajectoryCsv, type TrajectoryTable } from "./csv.js";

export class BundleError extends Error {
  override name = "BundleError";
}

export interface PhysicalParams {
  alpha: number;
  k_bc: number;
  length: number;
  heat_scale: number;
  t_desired: number;
  h_max: number;
}

export interface SummaryMetrics {
  max_temperature_k: number;
  max_error_k: number;
  min_coolant_k: number;
  first_unsafe_time_s: number | null;
  final_soc: number;
  soc_zero_crossing_s: number | null;
  final_time_s: number;
  n_samples: number;
}

export interface Summary {
  metadata: {
    name?: string;
    controller?: string;
    n_nodes?: number;
    params?: PhysicalParams;
    [key: string]: unknown;
  };
  metrics: SummaryMetrics;
  certificate: unknown;
  monitor: unknown;
}

export interface RunOutputs {
  /** Controller name from the summary (falls back to the directory name). */
  name: string;
  dir: string;
  table: TrajectoryTable;
  summary: Summary;
}

export interface ComparisonDoc {
  scenario: {
    name?: string;
    seed?: number;
    hash?: string;
    anomaly?: unknown;
    horizon?: number;
  };
  controllers: string[];
  summary: Record<
    string,
    { status: string; classification?: string; [key: string]: unknown }
  >;
}

export interface Bundle {
  dir: string;
  /** Present for comparison bundles, null for a bare run directory. */
  comparison: ComparisonDoc | null;
  runs: RunOutputs[];
}

function readJson(path: string): unknown {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new BundleError(`cannot read ${path}: ${(err as Error).message}`);
  }
  try {
    return JSON.parse(text);
  } catch (err) {
    throw new BundleError(`${path} is not valid JSON: ${(err as Error).message}`);
  }
}

/** Load one run directory (`trajectory.csv` + `summary.json`). */
export function loadRun(dir: string, name?: string): RunOutputs {
  const csvPath = join(dir, "trajectory.csv");
  const summaryPath = join(dir, "summary.json");
  let csvText: string;
  try {
    csvText = readFileSync(csvPath, "utf8");
  } catch (err) {
    throw new BundleError(`cannot read ${csvPath}: ${(err as Error).message}`);
  }
  const table = parseTrajectoryCsv(csvText, csvPath);
  const summary = readJson(summaryPath) as Summary;
  if (typeof summary !== "object" || summary === null || !("metrics" in summary)) {
    throw new BundleError(`${summaryPath}: missing "metrics" block`);
  }
  const runName =
    name ??
    (typeof summary.metadata?.controller === "string"
      ? summary.metadata.controller
      : basename(dir));
  return { name: runName, dir, table, summary };
}

/**
 * Load a comparison bundle, or fall back to treating `dir` as a single
 * run directory.  Failed runs recorded in comparison.json (no output
 * directory of their own) are skipped, preserving controller order.
 */
export function loadBundle(dir: string): Bundle {
  const comparisonPath = join(dir, "comparison.json");
  if (existsSync(comparisonPath)) {
    const comparison = readJson(comparisonPath) as ComparisonDoc;
    if (!Array.isArray(comparison.controllers)) {
      throw new BundleError(`${comparisonPath}: missing "controllers" list`);
    }
    const runs: RunOutputs[] = [];
    for (const name of comparison.controllers) {
      const row = comparison.summary?.[name];
      if (row !== undefined && row.status !== "ok") continue;
      runs.push(loadRun(join(dir, name), name));
    }
    if (runs.length === 0) {
      throw new BundleError(`${dir}: no successful runs in the bundle`);
    }
    return { dir, comparison, runs };
  }
  if (existsSync(join(dir, "trajectory.csv"))) {
    return { dir, comparison: null, runs: [loadRun(dir)] };
  }
  throw new BundleError(
    `${dir}: neither comparison.json nor trajectory.csv found`,
  );
}

/** Physical constants recorded by the simulator; needed to place the
 *  error field on an absolute temperature axis. */
export function physicalParams(run: RunOutputs): PhysicalParams {
  const params = run.summary.metadata?.params;
  if (
    params === undefined ||
    typeof params.t_desired !== "number" ||
    typeof params.h_max !== "number" ||
    typeof params.length !== "number"
  ) {
    throw new BundleError(
      `${run.dir}/summary.json: metadata.params with t_desired, h_max and length is required`,
    );
  }
  return params;
}
