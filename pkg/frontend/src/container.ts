/** Binary token-video container reader/writer.
 *
 * Layout (little-endian): magic "OTTV", u32 version=1, u32 frames,
 * u32 tokens per frame, u32 feature dim, u32 grid rows, u32 grid cols,
 * then float32 features (frame-major, token-major) and float32 per-token
 * saliency (each frame sums to 1).
 */

import { readFileSync, writeFileSync } from "node:fs";

import { OttvError } from "./errors.js";

export const MAGIC = "OTTV";
export const VERSION = 1;
const HEADER_BYTES = 4 + 6 * 4;

export interface TokenVideo {
  frameCount: number;
  tokensPerFrame: number;
  dim: number;
  gridRows: number;
  gridCols: number;
  /** (frameCount * tokensPerFrame * dim) row-major float32 values. */
  features: Float32Array;
  /** (frameCount * tokensPerFrame) float32 values. */
  saliency: Float32Array;
}

/** Reject anything that is not exactly a Float32Array — no silent dtype
 * conversion at the boundary. */
function requireFloat32(value: unknown, name: string): Float32Array {
  if (!(value instanceof Float32Array)) {
    throw new OttvError(
      "dtype_mismatch",
      `${name} must be a Float32Array, got ${Object.prototype.toString.call(value)}`,
    );
  }
  return value;
}

export function validateVideo(video: TokenVideo): void {
  const { frameCount, tokensPerFrame, dim, gridRows, gridCols } = video;
  for (const [name, v] of Object.entries({ frameCount, tokensPerFrame, dim, gridRows, gridCols })) {
    if (!Number.isInteger(v) || v < 1) {
      throw new OttvError("invalid_dimensions", `${name} must be a positive integer, got ${v}`);
    }
  }
  if (gridRows * gridCols !== tokensPerFrame) {
    throw new OttvError(
      "grid_mismatch",
      `grid ${gridRows}x${gridCols} does not cover ${tokensPerFrame} tokens per frame`,
    );
  }
  const features = requireFloat32(video.features, "features");
  const saliency = requireFloat32(video.saliency, "saliency");
  if (features.length !== frameCount * tokensPerFrame * dim) {
    throw new OttvError(
      "shape_mismatch",
      `features has ${features.length} values, expected ${frameCount * tokensPerFrame * dim}`,
    );
  }
  if (saliency.length !== frameCount * tokensPerFrame) {
    throw new OttvError(
      "shape_mismatch",
      `saliency has ${saliency.length} values, expected ${frameCount * tokensPerFrame}`,
    );
  }
}

export function encodeContainer(video: TokenVideo): Buffer {
  validateVideo(video);
  const buf = Buffer.alloc(
    HEADER_BYTES + 4 * (video.features.length + video.saliency.length),
  );
  buf.write(MAGIC, 0, "ascii");
  let off = 4;
  for (const v of [
    VERSION,
    video.frameCount,
    video.tokensPerFrame,
    video.dim,
    video.gridRows,
    video.gridCols,
  ]) {
    buf.writeUInt32LE(v, off);
    off += 4;
  }
  for (const value of video.features) {
    buf.writeFloatLE(value, off);
    off += 4;
  }
  for (const value of video.saliency) {
    buf.writeFloatLE(value, off);
    off += 4;
  }
  return buf;
}

export function decodeContainer(buf: Buffer): TokenVideo {
  if (buf.length < HEADER_BYTES || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new OttvError("bad_magic", "not an OTTV container (bad magic)");
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new OttvError("bad_version", `unsupported container version ${version}`);
  }
  const frameCount = buf.readUInt32LE(8);
  const tokensPerFrame = buf.readUInt32LE(12);
  const dim = buf.readUInt32LE(16);
  const gridRows = buf.readUInt32LE(20);
  const gridCols = buf.readUInt32LE(24);
  const nFeat = frameCount * tokensPerFrame * dim;
  const nSal = frameCount * tokensPerFrame;
  const expected = HEADER_BYTES + 4 * (nFeat + nSal);
  if (buf.length !== expected) {
    throw new OttvError(
      "truncated",
      `payload is ${buf.length} bytes, expected ${expected}`,
    );
  }
  const features = new Float32Array(nFeat);
  const saliency = new Float32Array(nSal);
  for (let i = 0; i < nFeat; i += 1) {
    features[i] = buf.readFloatLE(HEADER_BYTES + 4 * i);
  }
  for (let i = 0; i < nSal; i += 1) {
    saliency[i] = buf.readFloatLE(HEADER_BYTES + 4 * (nFeat + i));
  }
  const video = { frameCount, tokensPerFrame, dim, gridRows, gridCols, features, saliency };
  validateVideo(video);
  return video;
}

export function writeContainer(video: TokenVideo, path: string): void {
  writeFileSync(path, encodeContainer(video));
}

export function readContainer(path: string): TokenVideo {
  let buf: Buffer;
  try {
    buf = readFileSync(path);
  } catch (err) {
    throw new OttvError("io_error", `cannot read ${path}: ${String(err)}`);
  }
  return decodeContainer(buf);
}
