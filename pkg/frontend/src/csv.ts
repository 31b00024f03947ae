/**
 * Parser for the simulator's trajectory.csv files.
 *
 * Layout contract: one header row, then one sample per line.  Columns are
 * `t`, the spatial error field `h_0 … h_{N-1}` (kelvin above the set
 * point), and a fixed set of per-sample scalars (coolant commands, state
 * of charge, input/command norms, energy/barrier/Lyapunov functionals).
 */

export class CsvError extends Error {
  override name = "CsvError";
}

/** Scalar columns every trajectory file must carry (beyond `t` and `h_*`). */
export const REQUIRED_SCALARS = [
  "T_c1",
  "T_c2",
  "soc",
  "norm_D",
  "norm_u",
  "E",
  "B",
  "dist",
  "V",
  "agmon_max",
] as const;

export interface TrajectoryTable {
  /** Sample times in seconds, ascending. */
  times: Float64Array;
  /** Error field rows, one Float64Array of length `nNodes` per sample. */
  fields: Float64Array[];
  nNodes: number;
  /** Every non-`t`, non-`h_*` column by header name. */
  scalars: Map<string, Float64Array>;
}

function splitLines(text: string): string[] {
  const lines = text.split("\n");
  while (lines.length > 0 && lines[lines.length - 1]!.trim() === "") {
    lines.pop();
  }
  return lines;
}

/**
 * Parse a trajectory CSV.  Missing or malformed columns are reported by
 * name; malformed cells are reported with their 1-based data row number.
 */
export function parseTrajectoryCsv(
  text: string,
  source = "trajectory.csv",
): TrajectoryTable {
  const lines = splitLines(text);
  if (lines.length < 2) {
    throw new CsvError(`${source}: need a header row and at least one sample`);
  }
  const header = lines[0]!.split(",").map((c) => c.trim());

  const fieldCols: number[] = [];
  const fieldNames = new Set<string>();
  const scalarCols: Array<[string, number]> = [];
  let timeCol = -1;
  header.forEach((name, j) => {
    if (name === "t") {
      timeCol = j;
    } else if (/^h_\d+$/.test(name)) {
      fieldCols.push(j);
      fieldNames.add(name);
    } else {
      scalarCols.push([name, j]);
    }
  });

  const missing: string[] = [];
  if (timeCol < 0) missing.push("t");
  if (fieldCols.length === 0) missing.push("h_0");
  for (let i = 0; i < fieldCols.length; i++) {
    if (!fieldNames.has(`h_${i}`)) {
      missing.push(`h_${i}`);
      break;
    }
  }
  const present = new Set(scalarCols.map(([name]) => name));
  for (const name of REQUIRED_SCALARS) {
    if (!present.has(name)) missing.push(name);
  }
  if (missing.length > 0) {
    throw new CsvError(`${source}: missing columns: ${missing.join(", ")}`);
  }

  const nSamples = lines.length - 1;
  const nNodes = fieldCols.length;
  const times = new Float64Array(nSamples);
  const fields: Float64Array[] = new Array(nSamples);
  const scalars = new Map<string, Float64Array>(
    scalarCols.map(([name]) => [name, new Float64Array(nSamples)]),
  );

  for (let i = 0; i < nSamples; i++) {
    const cells = lines[i + 1]!.split(",");
    if (cells.length !== header.length) {
      throw new CsvError(
        `${source}: row ${i + 1}: expected ${header.length} cells, got ${cells.length}`,
      );
    }
    const num = (j: number, name: string): number => {
      const cell = cells[j]!.trim();
      // The writer uses Python float repr, whose non-finite spellings
      // differ from JavaScript's.
      if (cell === "nan") return Number.NaN;
      if (cell === "inf") return Number.POSITIVE_INFINITY;
      if (cell === "-inf") return Number.NEGATIVE_INFINITY;
      const v = Number(cell);
      if (cell === "" || Number.isNaN(v)) {
        throw new CsvError(
          `${source}: row ${i + 1}: column ${name} is not a number: ${JSON.stringify(cell)}`,
        );
      }
      return v;
    };
    times[i] = num(timeCol, "t");
    const row = new Float64Array(nNodes);
    for (let k = 0; k < nNodes; k++) {
      row[k] = num(fieldCols[k]!, `h_${k}`);
    }
    fields[i] = row;
    for (const [name, j] of scalarCols) {
      scalars.get(name)![i] = num(j, name);
    }
  }

  return { times, fields, nNodes, scalars };
}

/** Column accessor that reports absent names instead of returning undefined. */
export function scalarColumn(
  table: TrajectoryTable,
  name: string,
): Float64Array {
  const col = table.scalars.get(name);
  if (col === undefined) {
    throw new CsvError(`missing columns: ${name}`);
  }
  return col;
}
