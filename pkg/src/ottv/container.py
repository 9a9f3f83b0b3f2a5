"""Binary token-video container: on-disk format, validation, synthesis.

File layout (little-endian): magic ``OTTV``, u32 version, u32 frame count,
u32 tokens per frame, u32 feature dim, u32 grid rows, u32 grid cols, then
float32 features (frame-major, token-major) and float32 per-token saliency.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContainerError, ValidationError

MAGIC = b"OTTV"
VERSION = 1

# Per-frame saliency must sum to 1. Sums farther than this from 1 are
# rejected at ingestion; closer sums are renormalized.
SALIENCY_SUM_TOLERANCE = 1e-3
# Sums already this close to 1 are kept verbatim so that save/load/save
# round-trips are byte-stable under float32 quantization.
SALIENCY_EXACT_TOLERANCE = 1e-6

PROFILES = ("static", "panning", "scene_cut", "random")


@dataclass(frozen=True, eq=False)
class TokenVideo:
    """Immutable stack of per-frame visual tokens with saliency weights.

    ``features`` is (T, N_v, d) float64 and ``saliency`` is (T, N_v)
    float64 with each frame summing to 1. All frames share one
    ``grid_rows x grid_cols`` patch grid with row-major token indexing.
    """

    frame_count: int
    tokens_per_frame: int
    dim: int
    grid_rows: int
    grid_cols: int
    features: np.ndarray
    saliency: np.ndarray

    def __post_init__(self):
        validate_token_video(self)

    def grid_positions(self) -> np.ndarray:
        """(N_v, 2) array of (row, col) for each token index."""
        idx = np.arange(self.tokens_per_frame)
        return np.stack([idx // self.grid_cols, idx % self.grid_cols], axis=1)


def validate_token_video(video: TokenVideo) -> None:
    T, N, d = video.frame_count, video.tokens_per_frame, video.dim
    if T < 1 or N < 1 or d < 1:
        raise ValidationError(f"dimensions must be positive, got T={T} N_v={N} d={d}")
    if video.grid_rows < 1 or video.grid_cols < 1:
        raise ValidationError("grid dimensions must be positive")
    if video.grid_rows * video.grid_cols != N:
        raise ValidationError(
            f"grid {video.grid_rows}x{video.grid_cols} does not cover "
            f"{N} tokens per frame"
        )
    if video.features.shape != (T, N, d):
        raise ValidationError(
            f"features shape {video.features.shape} != {(T, N, d)}"
        )
    if video.saliency.shape != (T, N):
        raise ValidationError(f"saliency shape {video.saliency.shape} != {(T, N)}")
    if not np.all(np.isfinite(video.features)):
        raise ValidationError("features contain non-finite values")
    if not np.all(np.isfinite(video.saliency)):
        raise ValidationError("saliency contains non-finite values")
    if np.any(video.saliency < 0):
        raise ValidationError("saliency must be nonnegative")
    norms = np.linalg.norm(video.features, axis=2)
    if np.any(norms == 0.0):
        t, i = np.argwhere(norms == 0.0)[0]
        raise ValidationError(
            f"zero-norm token at frame {t}, index {i}; cosine similarity undefined"
        )
    sums = video.saliency.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > SALIENCY_SUM_TOLERANCE):
        t = int(np.argmax(np.abs(sums - 1.0)))
        raise ValidationError(
            f"frame {t} saliency sums to {sums[t]:.6g}, outside tolerance "
            f"{SALIENCY_SUM_TOLERANCE} of 1"
        )


def _normalized_saliency(saliency: np.ndarray) -> np.ndarray:
    """Renormalize frames whose sum drifted, leave near-exact frames alone."""
    sums = saliency.sum(axis=1, keepdims=True)
    needs = np.abs(sums - 1.0) > SALIENCY_EXACT_TOLERANCE
    return np.where(needs, saliency / sums, saliency)


def save_container(video: TokenVideo, path: str | Path, manifest: dict | None = None) -> None:
    """Write a TokenVideo to ``path``; optional JSON sidecar for provenance."""
    path = Path(path)
    header = MAGIC + struct.pack(
        "<6I",
        VERSION,
        video.frame_count,
        video.tokens_per_frame,
        video.dim,
        video.grid_rows,
        video.grid_cols,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(video.features, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(video.saliency, dtype="<f4").tobytes())
    if manifest is not None:
        path.with_suffix(".json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_container(path: str | Path) -> TokenVideo:
    """Read and validate a container file."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ContainerError(f"cannot read {path}: {exc}") from exc
    if len(blob) < 4 + 24 or blob[:4] != MAGIC:
        raise ContainerError(f"{path}: not an OTTV container (bad magic)")
    version, T, N, d, rows, cols = struct.unpack_from("<6I", blob, 4)
    if version != VERSION:
        raise ContainerError(f"{path}: unsupported container version {version}")
    offset = 4 + 24
    n_feat = T * N * d
    expected = offset + 4 * (n_feat + T * N)
    if len(blob) != expected:
        raise ContainerError(
            f"{path}: payload is {len(blob)} bytes, expected {expected}"
        )
    features = np.frombuffer(blob, dtype="<f4", count=n_feat, offset=offset)
    saliency = np.frombuffer(blob, dtype="<f4", count=T * N, offset=offset + 4 * n_feat)
    raw_sums = saliency.astype(np.float64).reshape(T, N).sum(axis=1)
    if np.any(np.abs(raw_sums - 1.0) > SALIENCY_SUM_TOLERANCE):
        t = int(np.argmax(np.abs(raw_sums - 1.0)))
        raise ContainerError(
            f"{path}: frame {t} saliency sums to {raw_sums[t]:.6g}, outside "
            f"tolerance {SALIENCY_SUM_TOLERANCE} of 1"
        )
    try:
        return TokenVideo(
            frame_count=T,
            tokens_per_frame=N,
            dim=d,
            grid_rows=rows,
            grid_cols=cols,
            features=features.astype(np.float64).reshape(T, N, d),
            saliency=_normalized_saliency(
                saliency.astype(np.float64).reshape(T, N)
            ),
        )
    except ValidationError as exc:
        raise ContainerError(f"{path}: {exc}") from exc


def with_uniform_saliency(video: TokenVideo) -> TokenVideo:
    """Replace saliency with the uniform per-frame distribution."""
    uniform = np.full_like(video.saliency, 1.0 / video.tokens_per_frame)
    return TokenVideo(
        frame_count=video.frame_count,
        tokens_per_frame=video.tokens_per_frame,
        dim=video.dim,
        grid_rows=video.grid_rows,
        grid_cols=video.grid_cols,
        features=video.features,
        saliency=uniform,
    )


def default_grid(tokens_per_frame: int) -> tuple[int, int]:
    """Most-square factorization rows x cols = N_v with rows <= cols."""
    rows = int(np.sqrt(tokens_per_frame))
    while rows > 1 and tokens_per_frame % rows != 0:
        rows -= 1
    return rows, tokens_per_frame // rows


def synthesize_video(
    profile: str,
    frame_count: int,
    tokens_per_frame: int,
    dim: int,
    seed: int,
    grid_rows: int | None = None,
    grid_cols: int | None = None,
) -> TokenVideo:
    """Deterministic synthetic fixture generator.

    ``static`` repeats frame 0 exactly; ``panning`` rolls the grid content
    one column per frame; ``scene_cut`` switches to an independent token
    pool at T//2 (static within each segment); ``random`` draws i.i.d.
    unit-normalized Gaussians per frame. Saliency is Dirichlet(1) from the
    same seed.
    """
    if profile not in PROFILES:
        raise ValidationError(f"unknown profile {profile!r}, expected one of {PROFILES}")
    if grid_rows is None or grid_cols is None:
        grid_rows, grid_cols = default_grid(tokens_per_frame)
    T, N, d = frame_count, tokens_per_frame, dim
    rng = np.random.default_rng(seed)

    def unit_tokens(count):
        x = rng.standard_normal((count, d))
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    if profile == "static":
        base = unit_tokens(N)
        features = np.broadcast_to(base, (T, N, d)).copy()
        sal = np.broadcast_to(rng.dirichlet(np.ones(N)), (T, N)).copy()
    elif profile == "panning":
        base = unit_tokens(N).reshape(grid_rows, grid_cols, d)
        base_sal = rng.dirichlet(np.ones(N)).reshape(grid_rows, grid_cols)
        features = np.empty((T, N, d))
        sal = np.empty((T, N))
        for t in range(T):
            features[t] = np.roll(base, -t, axis=1).reshape(N, d)
            sal[t] = np.roll(base_sal, -t, axis=1).reshape(N)
    elif profile == "scene_cut":
        pool_a = unit_tokens(N)
        pool_b = unit_tokens(N)
        sal_a = rng.dirichlet(np.ones(N))
        sal_b = rng.dirichlet(np.ones(N))
        cut = T // 2
        features = np.empty((T, N, d))
        sal = np.empty((T, N))
        features[:cut] = pool_a
        features[cut:] = pool_b
        sal[:cut] = sal_a
        sal[cut:] = sal_b
    else:  # random
        features = unit_tokens(T * N).reshape(T, N, d)
        sal = rng.dirichlet(np.ones(N), size=T)

    return TokenVideo(
        frame_count=T,
        tokens_per_frame=N,
        dim=d,
        grid_rows=grid_rows,
        grid_cols=grid_cols,
        features=features,
        saliency=sal,
    )


def colocated_similarity(video: TokenVideo, t: int) -> float:
    """Mean cosine similarity of same-index tokens in frames t and t+1.

    Clamped to [0, 1]; the pre-pruning signal behind the semantic/locality
    mixing weight.
    """
    if not 0 <= t < video.frame_count - 1:
        raise ValidationError(f"pair index {t} out of range for T={video.frame_count}")
    a = video.features[t]
    b = video.features[t + 1]
    cos = np.sum(a * b, axis=1) / (
        np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    )
    return float(np.clip(np.mean(cos), 0.0, 1.0))
