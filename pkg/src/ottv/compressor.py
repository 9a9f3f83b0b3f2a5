"""End-to-end orchestration and the sklearn-style estimator facade."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import budget as budget_mod
from . import executor as executor_mod
from . import spatial as spatial_mod
from . import transport as transport_mod
from .container import TokenVideo
from .errors import ValidationError

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    """All knobs of a compression run; defaults follow the reference setup."""

    ratio: float = 0.25
    gamma: float = 0.3
    tau_m: float = 0.3
    tau_b: float = 0.3
    tau_c: float = 0.3
    epsilon: float = 0.01
    max_iters: int = 200
    tol: float = 1e-5
    strategy: str = "ours"
    alpha_mode: str = "position_aligned"
    alpha_fixed: float = 1.0
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.ratio <= 1.0:
            raise ValidationError(f"ratio must be in (0, 1], got {self.ratio}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValidationError(f"gamma must be in [0, 1], got {self.gamma}")
        for name in ("tau_m", "tau_b"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.tau_c <= 2.0:
            raise ValidationError(f"tau_c must be in [0, 2], got {self.tau_c}")
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if self.strategy not in spatial_mod.STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if self.alpha_mode not in transport_mod.ALPHA_MODES:
            raise ValidationError(f"unknown alpha mode {self.alpha_mode!r}")
        if not 0.0 <= self.alpha_fixed <= 1.0:
            raise ValidationError(f"alpha_fixed must be in [0, 1], got {self.alpha_fixed}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")


@dataclass
class RunReport:
    """Per-run diagnostics mirroring each pipeline stage."""

    config: dict
    frame_count: int
    tokens_per_frame: int
    retained_per_frame: int
    budget_total: int
    pairs: list  # per-pair dicts: W, alpha, B, rho, converged, iterations
    cv: float
    overflow_rate: float
    survivor_count: int
    achieved_retention: float
    timings_ms: dict = field(default_factory=dict)

    def to_json_dict(self, include_timings: bool = False) -> dict:
        """Deterministic JSON payload; wall times are opt-in because they
        vary between otherwise identical runs."""
        payload = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": self.config,
            "frame_count": self.frame_count,
            "tokens_per_frame": self.tokens_per_frame,
            "retained_per_frame": self.retained_per_frame,
            "budget_total": self.budget_total,
            "pairs": self.pairs,
            "cv": self.cv,
            "overflow_rate": self.overflow_rate,
            "survivor_count": self.survivor_count,
            "achieved_retention": self.achieved_retention,
        }
        if include_timings:
            payload["timings_ms"] = self.timings_ms
        return payload


def _map_indexed(fn, items, workers):
    """Order-preserving map, optionally over a thread pool."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run(
    config: PipelineConfig, video: TokenVideo
) -> tuple[executor_mod.CompressedSequence, RunReport]:
    """Execute spatial selection, pair transport, budgeting, and merging."""
    T, N = video.frame_count, video.tokens_per_frame
    r_s, r_t = spatial_mod.retention_split(config.ratio, config.gamma)
    temporal_active = config.gamma > 0.0
    if T < 2 and temporal_active:
        raise ValidationError("temporal compression needs at least 2 frames")
    k = spatial_mod.tokens_to_keep(N, r_s)
    timings: dict = {}

    start = time.perf_counter()
    grid_positions = video.grid_positions()
    frames = _map_indexed(
        lambda t: spatial_mod.retain_frame(
            t,
            video.features[t],
            video.saliency[t],
            grid_positions,
            k,
            config.strategy,
            config.tau_m,
        ),
        range(T),
        config.workers,
    )
    timings["spatial"] = (time.perf_counter() - start) * 1000

    pairs: list = []
    budgets = None
    b_tot = 0
    if temporal_active:
        b_tot = budget_mod.total_budget(k, T, r_t)
    if b_tot > 0:
        start = time.perf_counter()
        alphas = [
            transport_mod.mixing_weight_variant(
                config.alpha_mode, video, t, config.alpha_fixed
            )
            for t in range(T - 1)
        ]
        pairs = _map_indexed(
            lambda t: transport_mod.solve_pair(
                t,
                frames[t],
                frames[t + 1],
                alphas[t],
                video.grid_rows,
                video.grid_cols,
                config.epsilon,
                config.max_iters,
                config.tol,
            ),
            range(T - 1),
            config.workers,
        )
        timings["transport"] = (time.perf_counter() - start) * 1000

        start = time.perf_counter()
        difficulties = np.array([p.difficulty for p in pairs])
        budgets = budget_mod.allocate(difficulties, b_tot, k, config.tau_b)
        timings["budget"] = (time.perf_counter() - start) * 1000

        start = time.perf_counter()
        edge_lists = _map_indexed(
            lambda t: executor_mod.select_matches(
                pairs[t], int(budgets.budgets[t]), config.tau_c
            ),
            range(T - 1),
            config.workers,
        )
        edges = [edge for edge_list in edge_lists for edge in edge_list]
    else:
        start = time.perf_counter()
        edges = []
    sequence = executor_mod.resolve_graph(edges, frames)
    timings["execute"] = (time.perf_counter() - start) * 1000

    achieved = executor_mod.compression_ratio(sequence, T, N)
    pair_rows = []
    for t, pair in enumerate(pairs):
        pair_rows.append(
            {
                "pair": t,
                "difficulty": pair.difficulty,
                "alpha": pair.alpha,
                "budget": int(budgets.budgets[t]),
                "ratio": float(budgets.ratios[t]),
                "converged": bool(pair.converged),
                "iterations": pair.iterations,
            }
        )
    report = RunReport(
        config=asdict(config),
        frame_count=T,
        tokens_per_frame=N,
        retained_per_frame=k,
        budget_total=b_tot,
        pairs=pair_rows,
        cv=budgets.cv if budgets is not None else 0.0,
        overflow_rate=budgets.overflow_rate if budgets is not None else 0.0,
        survivor_count=len(sequence.token_ids),
        achieved_retention=achieved,
        timings_ms=timings,
    )
    return sequence, report


class VideoTokenCompressor(TransformerMixin, BaseEstimator):
    """Estimator facade over the compression pipeline.

    Stateless: ``fit`` validates parameters and returns self, ``transform``
    maps a TokenVideo to its CompressedSequence and records the run
    diagnostics in ``report_``.
    """

    def __init__(
        self,
        ratio=0.25,
        gamma=0.3,
        tau_m=0.3,
        tau_b=0.3,
        tau_c=0.3,
        epsilon=0.01,
        max_iters=200,
        tol=1e-5,
        strategy="ours",
        alpha_mode="position_aligned",
        alpha_fixed=1.0,
        workers=1,
        seed=0,
    ):
        self.ratio = ratio
        self.gamma = gamma
        self.tau_m = tau_m
        self.tau_b = tau_b
        self.tau_c = tau_c
        self.epsilon = epsilon
        self.max_iters = max_iters
        self.tol = tol
        self.strategy = strategy
        self.alpha_mode = alpha_mode
        self.alpha_fixed = alpha_fixed
        self.workers = workers
        self.seed = seed

    def _config(self) -> PipelineConfig:
        return PipelineConfig(**self.get_params())

    def fit(self, X: TokenVideo | None = None, y=None):
        self._config()
        return self

    def transform(self, X: TokenVideo) -> executor_mod.CompressedSequence:
        sequence, report = run(self._config(), X)
        self.report_ = report
        return sequence
