/**
 * Provenance manifest for rendered figures: every figure lists the
 * SHA-256 of each source file it was rendered from, plus its own hash,
 * so a consumer can verify that figures and data belong together.
 * The manifest carries no timestamps — regeneration from identical
 * inputs is byte-identical.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

export interface SourceHash {
  /** Path relative to the bundle directory. */
  path: string;
  sha256: string;
}

export interface FigureRecord {
  /** Figure file name inside the output directory. */
  file: string;
  kind: string;
  /** SHA-256 of the rendered figure itself. */
  sha256: string;
  sources: SourceHash[];
}

export interface Manifest {
  bundle: string;
  figures: FigureRecord[];
}

export function sha256Text(text: string): string {
  return createHash("sha256").update(text, "utf8").digest("hex");
}

export function sha256File(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

/** Stable manifest serialization: figures sorted by file name. */
export function manifestJson(manifest: Manifest): string {
  const sorted: Manifest = {
    bundle: manifest.bundle,
    figures: [...manifest.figures].sort((a, b) =>
      a.file < b.file ? -1 : a.file > b.file ? 1 : 0,
    ),
  };
  return JSON.stringify(sorted, null, 2) + "\n";
}
