/** Plain key-value mirror of the engine's pipeline configuration.
 *
 * Defaults match the CLI exactly; unknown keys are rejected here and
 * value-level validation is delegated to the engine, whose failures map
 * to the "invalid_config" error code.
 */

import { OttvError } from "./errors.js";

export interface BoundConfig {
  ratio?: number;
  gamma?: number;
  tauM?: number;
  tauB?: number;
  tauC?: number;
  epsilon?: number;
  maxIters?: number;
  tol?: number;
  strategy?: string;
  alphaMode?: string;
  alphaFixed?: number;
  workers?: number;
  seed?: number;
  uniformSaliency?: boolean;
  timings?: boolean;
}

export const DEFAULT_CONFIG: Required<BoundConfig> = {
  ratio: 0.25,
  gamma: 0.3,
  tauM: 0.3,
  tauB: 0.3,
  tauC: 0.3,
  epsilon: 0.01,
  maxIters: 200,
  tol: 1e-5,
  strategy: "ours",
  alphaMode: "position_aligned",
  alphaFixed: 1.0,
  workers: 1,
  seed: 0,
  uniformSaliency: false,
  timings: false,
};

const FLAG_NAMES: Record<string, string> = {
  ratio: "--ratio",
  gamma: "--gamma",
  tauM: "--tau-m",
  tauB: "--tau-b",
  tauC: "--tau-c",
  epsilon: "--epsilon",
  maxIters: "--max-iters",
  tol: "--tol",
  strategy: "--strategy",
  alphaMode: "--alpha-mode",
  alphaFixed: "--alpha-fixed",
  workers: "--workers",
  seed: "--seed",
};

export function resolveConfig(config: BoundConfig = {}): Required<BoundConfig> {
  for (const key of Object.keys(config)) {
    if (!(key in DEFAULT_CONFIG)) {
      throw new OttvError("unknown_key", `unknown config key "${key}"`);
    }
  }
  return { ...DEFAULT_CONFIG, ...config };
}

/** CLI flag list for a resolved configuration. */
export function configToFlags(config: Required<BoundConfig>): string[] {
  const flags: string[] = [];
  for (const [key, flag] of Object.entries(FLAG_NAMES)) {
    flags.push(flag, String(config[key as keyof BoundConfig]));
  }
  if (config.uniformSaliency) {
    flags.push("--uniform-saliency");
  }
  if (config.timings) {
    flags.push("--timings");
  }
  return flags;
}
