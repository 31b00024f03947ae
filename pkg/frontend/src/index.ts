/**
 * Command line: render the figure set for a simulator output bundle.
 *
 *   thermsafe-figures --bundle <dir> --out <dir>
 *                     [--threshold <K>] [--baseline <run-dir>]
 *
 * `--bundle` accepts either a comparison bundle (comparison.json plus one
 * run directory per controller) or a single run directory.  Exit codes:
 * 0 on success, 2 on usage or input validation errors.
 */

import { pathToFileURL } from "node:url";
import { BundleError } from "./bundle.js";
import { CsvError } from "./csv.js";
import { SpecError } from "./figures.js";
import { renderAll, type RenderOptions } from "./batch.js";

export { loadBundle, loadRun, physicalParams } from "./bundle.js";
export { parseTrajectoryCsv, scalarColumn } from "./csv.js";
export {
  buildHeatmapModel,
  buildSocModel,
  buildTemperatureModel,
  renderCoolantFigure,
  renderHeatFigure,
  renderHeatmapFigure,
  renderSocFigure,
  renderTemperatureFigure,
  validateSpec,
  type FigureSpec,
} from "./figures.js";
export { manifestJson, sha256File, sha256Text } from "./manifest.js";
export { renderAll } from "./batch.js";

export class UsageError extends Error {
  override name = "UsageError";
}

export const USAGE =
  "usage: thermsafe-figures --bundle <dir> --out <dir> " +
  "[--threshold <K>] [--baseline <run-dir>]";

interface CliArgs {
  bundle: string;
  out: string;
  options: RenderOptions;
}

export function parseArgs(argv: string[]): CliArgs {
  let bundle: string | undefined;
  let out: string | undefined;
  const options: RenderOptions = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]!;
    const next = (): string => {
      const v = argv[i + 1];
      if (v === undefined) throw new UsageError(`${arg} needs a value`);
      i++;
      return v;
    };
    switch (arg) {
      case "--bundle":
        bundle = next();
        break;
      case "--out":
        out = next();
        break;
      case "--threshold": {
        const v = Number(next());
        if (!Number.isFinite(v)) {
          throw new UsageError("--threshold needs a number (kelvin)");
        }
        options.unsafeThreshold = v;
        break;
      }
      case "--baseline":
        options.baselineDir = next();
        break;
      case "--help":
      case "-h":
        throw new UsageError(USAGE);
      default:
        throw new UsageError(`unknown argument: ${arg}\n${USAGE}`);
    }
  }
  if (bundle === undefined || out === undefined) {
    throw new UsageError(`--bundle and --out are required\n${USAGE}`);
  }
  return { bundle, out, options };
}

export interface CliOutcome {
  code: number;
  /** JSON summary on success, error text on failure. */
  message: string;
}

/** Testable entry point: never exits, returns the outcome instead. */
export function run(argv: string[]): CliOutcome {
  try {
    const args = parseArgs(argv);
    const result = renderAll(args.bundle, args.out, args.options);
    return {
      code: 0,
      message:
        JSON.stringify(
          {
            bundle: result.bundleDir,
            out_dir: result.outDir,
            figures: result.figures,
            manifest: result.manifestPath,
          },
          null,
          2,
        ) + "\n",
    };
  } catch (err) {
    if (
      err instanceof UsageError ||
      err instanceof SpecError ||
      err instanceof BundleError ||
      err instanceof CsvError
    ) {
      return { code: 2, message: `error: ${err.message}\n` };
    }
    throw err;
  }
}

function main(): void {
  const outcome = run(process.argv.slice(2));
  if (outcome.code === 0) {
    process.stdout.write(outcome.message);
  } else {
    process.stderr.write(outcome.message);
  }
  process.exitCode = outcome.code;
}

const invokedAsScript =
  typeof process.argv[1] === "string" &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedAsScript) {
  main();
}
