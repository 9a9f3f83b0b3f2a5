import type { TokenVideo } from "../src/container.js";

/** Small deterministic PRNG so fixtures are reproducible across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomVideo(
  seed: number,
  frameCount: number,
  gridRows: number,
  gridCols: number,
  dim: number,
): TokenVideo {
  const rand = mulberry32(seed);
  const tokensPerFrame = gridRows * gridCols;
  const features = new Float32Array(frameCount * tokensPerFrame * dim);
  for (let i = 0; i < features.length; i += 1) {
    // Offset away from zero so no token can have zero norm.
    features[i] = rand() * 2 - 1 + (rand() < 0.5 ? 0.05 : -0.05);
  }
  const saliency = new Float32Array(frameCount * tokensPerFrame);
  for (let t = 0; t < frameCount; t += 1) {
    const row = new Float64Array(tokensPerFrame);
    let sum = 0;
    for (let i = 0; i < tokensPerFrame; i += 1) {
      row[i] = rand() + 0.05;
      sum += row[i];
    }
    for (let i = 0; i < tokensPerFrame; i += 1) {
      saliency[t * tokensPerFrame + i] = row[i] / sum;
    }
  }
  return { frameCount, tokensPerFrame, dim, gridRows, gridCols, features, saliency };
}
