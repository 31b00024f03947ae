import { cpSync, mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { loadBundle, loadRun, physicalParams } from "../src/bundle.js";

const fixture = (rel: string): string =>
  fileURLToPath(new URL(`./fixtures/${rel}`, import.meta.url));

describe("loadRun", () => {
  it("loads a run directory and names it after its controller", () => {
    const run = loadRun(fixture("attack-run"));
    expect(run.name).toBe("oc");
    expect(run.table.nNodes).toBe(21);
    expect(run.table.times.length).toBe(run.summary.metrics.n_samples);
    expect(run.summary.metrics.final_time_s).toBe(150.0);
  });

  it("exposes the physical constants the figures need", () => {
    const p = physicalParams(loadRun(fixture("equilibrium-run")));
    expect(p.t_desired).toBe(298.0);
    expect(p.h_max).toBe(15.0);
    expect(p.length).toBe(1.0);
  });

  it("fails with the path when the directory has no trajectory", () => {
    expect(() => loadRun("/nonexistent/run")).toThrow(/trajectory\.csv/);
  });

  it("rejects a summary without metrics", () => {
    const dir = mkdtempSync(join(tmpdir(), "run-"));
    cpSync(join(fixture("attack-run"), "trajectory.csv"), join(dir, "trajectory.csv"));
    writeFileSync(join(dir, "summary.json"), "{}\n");
    expect(() => loadRun(dir)).toThrow(/missing "metrics"/);
  });

  it("reports missing physical params by field", () => {
    const dir = mkdtempSync(join(tmpdir(), "run-"));
    cpSync(join(fixture("attack-run"), "trajectory.csv"), join(dir, "trajectory.csv"));
    writeFileSync(
      join(dir, "summary.json"),
      JSON.stringify({ metadata: {}, metrics: { n_samples: 151 } }),
    );
    expect(() => physicalParams(loadRun(dir))).toThrow(/metadata\.params/);
  });
});

describe("loadBundle", () => {
  it("loads every successful run in controller order", () => {
    const bundle = loadBundle(fixture("fault-bundle"));
    expect(bundle.comparison).not.toBeNull();
    expect(bundle.runs.map((r) => r.name)).toEqual(["oc", "stc", "stsfc"]);
    expect(bundle.comparison!.scenario.name).toBe("fault-small");
  });

  it("treats a bare run directory as a one-run bundle", () => {
    const bundle = loadBundle(fixture("attack-run"));
    expect(bundle.comparison).toBeNull();
    expect(bundle.runs.length).toBe(1);
    expect(bundle.runs[0]!.name).toBe("oc");
  });

  it("skips runs recorded as failed in comparison.json", () => {
    const dir = mkdtempSync(join(tmpdir(), "bundle-"));
    cpSync(join(fixture("fault-bundle"), "oc"), join(dir, "oc"), {
      recursive: true,
    });
    writeFileSync(
      join(dir, "comparison.json"),
      JSON.stringify({
        scenario: { name: "partial" },
        controllers: ["oc", "stsfc"],
        summary: {
          oc: { status: "ok" },
          stsfc: { status: "failed", error: "numerical failure" },
        },
      }),
    );
    const bundle = loadBundle(dir);
    expect(bundle.runs.map((r) => r.name)).toEqual(["oc"]);
  });

  it("refuses a bundle whose runs all failed", () => {
    const dir = mkdtempSync(join(tmpdir(), "bundle-"));
    writeFileSync(
      join(dir, "comparison.json"),
      JSON.stringify({
        scenario: { name: "empty" },
        controllers: ["oc"],
        summary: { oc: { status: "failed", error: "boom" } },
      }),
    );
    expect(() => loadBundle(dir)).toThrow(/no successful runs/);
  });

  it("names the directory when nothing loadable is present", () => {
    const dir = mkdtempSync(join(tmpdir(), "bundle-"));
    expect(() => loadBundle(dir)).toThrow(
      /neither comparison\.json nor trajectory\.csv/,
    );
  });
});
