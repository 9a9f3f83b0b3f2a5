"""Entropic optimal transport between adjacent retained frames.

Builds the mixed semantic/locality cost matrix, solves the regularized
problem with log-domain Sinkhorn scaling, and reports the plan plus its
transport difficulty (the plan's total cost).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .container import TokenVideo, colocated_similarity
from .errors import NumericalError, ValidationError
from .spatial import RetainedFrame

ALPHA_MODES = ("position_aligned", "kernel3x3", "global", "fixed")


@dataclass(frozen=True)
class PairTransport:
    """Solved transport problem for one adjacent frame pair."""

    pair_index: int
    cost: np.ndarray  # (K, K), rows = frame t, cols = frame t+1
    alpha: float
    plan: np.ndarray  # (K, K)
    difficulty: float
    converged: bool
    iterations: int
    # (iteration, <P,C> - eps*H(P)) recorded every 10 iterations
    checkpoints: list = field(default_factory=list)


def mixing_weight(s_bar: float) -> float:
    """alpha = 1 - s_bar/2, confined to [0.5, 1] for s_bar in [0, 1]."""
    if not 0.0 <= s_bar <= 1.0:
        raise ValidationError(f"colocated similarity must be in [0, 1], got {s_bar}")
    return 1.0 - s_bar / 2.0


def _kernel3x3_similarity(video: TokenVideo, t: int) -> float:
    """Per-position cosine between 3x3-neighborhood means (no padding)."""
    rows, cols = video.grid_rows, video.grid_cols
    a = video.features[t].reshape(rows, cols, video.dim)
    b = video.features[t + 1].reshape(rows, cols, video.dim)

    def window_means(x):
        out = np.empty_like(x)
        for r in range(rows):
            r0, r1 = max(0, r - 1), min(rows, r + 2)
            for c in range(cols):
                c0, c1 = max(0, c - 1), min(cols, c + 2)
                out[r, c] = x[r0:r1, c0:c1].mean(axis=(0, 1))
        return out

    ma = window_means(a).reshape(-1, video.dim)
    mb = window_means(b).reshape(-1, video.dim)
    na = np.linalg.norm(ma, axis=1)
    nb = np.linalg.norm(mb, axis=1)
    valid = (na > 0) & (nb > 0)
    if not np.any(valid):
        raise NumericalError("all 3x3 window means are zero vectors")
    cos = np.sum(ma[valid] * mb[valid], axis=1) / (na[valid] * nb[valid])
    return float(np.clip(np.mean(cos), 0.0, 1.0))


def _global_similarity(video: TokenVideo, t: int) -> float:
    a = video.features[t].mean(axis=0)
    b = video.features[t + 1].mean(axis=0)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise NumericalError("frame-mean token vector has zero norm")
    return float(np.clip(float(a @ b) / (na * nb), 0.0, 1.0))


def mixing_weight_variant(
    mode: str, video: TokenVideo, t: int, fixed_alpha: float = 1.0
) -> float:
    """alpha_t under one of the supported similarity scales."""
    if mode == "fixed":
        if not 0.0 <= fixed_alpha <= 1.0:
            raise ValidationError(f"fixed alpha must be in [0, 1], got {fixed_alpha}")
        return fixed_alpha
    if mode == "position_aligned":
        return mixing_weight(colocated_similarity(video, t))
    if mode == "kernel3x3":
        return mixing_weight(_kernel3x3_similarity(video, t))
    if mode == "global":
        return mixing_weight(_global_similarity(video, t))
    raise ValidationError(f"unknown alpha mode {mode!r}, expected one of {ALPHA_MODES}")


def build_cost(
    left: RetainedFrame,
    right: RetainedFrame,
    alpha: float,
    grid_rows: int,
    grid_cols: int,
) -> np.ndarray:
    """C_ij = alpha * cosine distance + (1 - alpha) * grid distance / d_max.

    d_max is the corner-to-corner diagonal of the full original grid (not
    the retained subset), so locality is comparable across pairs and
    reaches exactly 1 between opposite corners.
    """
    a = left.features / np.linalg.norm(left.features, axis=1, keepdims=True)
    b = right.features / np.linalg.norm(right.features, axis=1, keepdims=True)
    c_sem = 1.0 - a @ b.T
    d_max = math.hypot(grid_rows - 1, grid_cols - 1) or 1.0
    delta = left.positions[:, None, :] - right.positions[None, :, :]
    c_loc = np.linalg.norm(delta.astype(np.float64), axis=2) / d_max
    return alpha * c_sem + (1.0 - alpha) * c_loc


def sinkhorn(
    m_src: np.ndarray,
    m_dst: np.ndarray,
    cost: np.ndarray,
    epsilon: float,
    max_iters: int = 200,
    tol: float = 1e-5,
) -> tuple[np.ndarray, bool, int, list]:
    """Log-domain Sinkhorn scaling.

    Returns (plan, converged, iterations, checkpoints). Convergence is the
    sup-norm change of the log-domain scaling vector dropping below
    ``tol``; checkpoints record the entropic objective every 10
    iterations.
    """
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    m_src = np.asarray(m_src, dtype=np.float64)
    m_dst = np.asarray(m_dst, dtype=np.float64)
    if np.any(m_src <= 0) or np.any(m_dst <= 0):
        raise ValidationError("marginals must be strictly positive")
    for name, m in (("source", m_src), ("target", m_dst)):
        if abs(m.sum() - 1.0) > 1e-9:
            raise ValidationError(f"{name} marginal sums to {m.sum():.12g}, not 1")
    log_a = np.log(m_src)
    log_b = np.log(m_dst)
    scaled_cost = cost / epsilon
    f = np.zeros(len(m_src))  # log-domain potentials, already divided by eps
    g = np.zeros(len(m_dst))
    converged = False
    iterations = 0
    checkpoints: list = []
    for it in range(1, max_iters + 1):
        f_new = log_a - logsumexp(g[None, :] - scaled_cost, axis=1)
        g = log_b - logsumexp(f_new[:, None] - scaled_cost, axis=0)
        if not (np.all(np.isfinite(f_new)) and np.all(np.isfinite(g))):
            raise NumericalError(
                "non-finite Sinkhorn potentials; epsilon too small for the cost scale"
            )
        delta = float(np.max(np.abs(f_new - f)))
        f = f_new
        iterations = it
        if it % 10 == 0:
            checkpoints.append((it, _entropic_objective(f, g, scaled_cost, cost, epsilon)))
        if delta < tol:
            converged = True
            break
    plan = np.exp(f[:, None] + g[None, :] - scaled_cost)
    if not np.all(np.isfinite(plan)):
        raise NumericalError("non-finite transport plan after stabilization")
    return plan, converged, iterations, checkpoints


def _entropic_objective(f, g, scaled_cost, cost, epsilon):
    plan = np.exp(f[:, None] + g[None, :] - scaled_cost)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(plan > 0, plan * np.log(plan), 0.0)
    return float((plan * cost).sum() + epsilon * plogp.sum())


def difficulty(plan: np.ndarray, cost: np.ndarray) -> float:
    """Total cost incurred by the transport plan."""
    return float((plan * cost).sum())


def solve_pair(
    pair_index: int,
    left: RetainedFrame,
    right: RetainedFrame,
    alpha: float,
    grid_rows: int,
    grid_cols: int,
    epsilon: float,
    max_iters: int,
    tol: float,
) -> PairTransport:
    """Cost construction plus Sinkhorn solve for one adjacent pair."""
    cost = build_cost(left, right, alpha, grid_rows, grid_cols)
    plan, converged, iterations, checkpoints = sinkhorn(
        left.mass, right.mass, cost, epsilon, max_iters, tol
    )
    return PairTransport(
        pair_index=pair_index,
        cost=cost,
        alpha=alpha,
        plan=plan,
        difficulty=difficulty(plan, cost),
        converged=converged,
        iterations=iterations,
        checkpoints=checkpoints,
    )
