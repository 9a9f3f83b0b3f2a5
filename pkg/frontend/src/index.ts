/** In-process API over the ottv engine.
 *
 * The engine is consumed strictly through its external interfaces: the
 * binary container format (read/written natively here) and the `ottv`
 * command-line tool (driven as a subprocess through temporary files), so
 * results are byte-identical to direct CLI use by construction.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import {
  BoundConfig,
  configToFlags,
  DEFAULT_CONFIG,
  resolveConfig,
} from "./config.js";
import {
  readContainer,
  TokenVideo,
  writeContainer,
} from "./container.js";
import { codeForExit, OttvError } from "./errors.js";

export { BoundConfig, DEFAULT_CONFIG, resolveConfig } from "./config.js";
export {
  decodeContainer,
  encodeContainer,
  readContainer,
  TokenVideo,
  writeContainer,
} from "./container.js";
export { OttvError } from "./errors.js";

const ENGINE = process.env.OTTV_BIN ?? "ottv";

export interface CompressResult {
  /** Survivor container: one frame, 1 x S grid, uniform saliency. */
  survivors: TokenVideo;
  /** "frame:token" survivor id -> merged member ids. */
  components: Record<string, string[]>;
  /** Run report as emitted by the engine (schema_version 1). */
  report: Record<string, unknown>;
  /** Raw bytes of the three artifacts, for byte-level comparisons. */
  raw: { container: Buffer; components: Buffer; report: Buffer };
}

function runEngine(args: string[]): void {
  const proc = spawnSync(ENGINE, args, { encoding: "utf8" });
  if (proc.error) {
    throw new OttvError("engine_unavailable", `cannot launch ${ENGINE}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr || proc.stdout || "").trim();
    throw new OttvError(codeForExit(proc.status ?? -1), detail || `engine exited with ${proc.status}`);
  }
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "ottv-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** Compress a token video; identical semantics and bytes as the CLI. */
export function compress(video: TokenVideo, config: BoundConfig = {}): CompressResult {
  const resolved = resolveConfig(config);
  return withTempDir((dir) => {
    const input = join(dir, "input.ottv");
    const out = join(dir, "out.ottv");
    const reportPath = join(dir, "report.json");
    writeContainer(video, input);
    runEngine([
      "compress",
      "--input", input,
      "--out", out,
      "--report", reportPath,
      ...configToFlags(resolved),
    ]);
    const containerBytes = readFileSync(out);
    const componentBytes = readFileSync(join(dir, "out.components.json"));
    const reportBytes = readFileSync(reportPath);
    return {
      survivors: readContainer(out),
      components: JSON.parse(componentBytes.toString("utf8")),
      report: JSON.parse(reportBytes.toString("utf8")),
      raw: { container: containerBytes, components: componentBytes, report: reportBytes },
    };
  });
}

export interface SynthesizeOptions {
  profile: "static" | "panning" | "scene_cut" | "random";
  frames: number;
  tokens: number;
  dim: number;
  seed?: number;
  gridRows?: number;
  gridCols?: number;
}

/** Generate a deterministic synthetic fixture through the engine. */
export function synthesize(options: SynthesizeOptions): TokenVideo {
  return withTempDir((dir) => {
    const out = join(dir, "synth.ottv");
    const args = [
      "synth",
      "--profile", options.profile,
      "--frames", String(options.frames),
      "--tokens", String(options.tokens),
      "--dim", String(options.dim),
      "--seed", String(options.seed ?? 0),
      "--out", out,
    ];
    if (options.gridRows !== undefined) {
      args.push("--grid-rows", String(options.gridRows));
    }
    if (options.gridCols !== undefined) {
      args.push("--grid-cols", String(options.gridCols));
    }
    runEngine(args);
    return readContainer(out);
  });
}

/** Version string of the underlying engine. */
export function version(): string {
  const proc = spawnSync(ENGINE, ["--version"], { encoding: "utf8" });
  if (proc.error || proc.status !== 0) {
    throw new OttvError("engine_unavailable", `cannot query ${ENGINE} version`);
  }
  return proc.stdout.trim();
}
