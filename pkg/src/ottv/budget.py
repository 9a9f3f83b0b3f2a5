"""Difficulty-driven integer budget allocation with per-pair caps.

Real-valued softmax targets are rounded by largest-remainder so the
total is conserved exactly; pairs that would exceed the cap are frozen
at the cap and the residual is re-allocated over the remaining pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spatial import round_half_up


@dataclass(frozen=True)
class BudgetAllocation:
    total: int
    budgets: np.ndarray  # (T-1,) integers, each <= cap
    cap: int
    weights: np.ndarray  # (T-1,) first-pass softmax weights
    ratios: np.ndarray  # (T-1,) budgets relative to the uniform share
    frozen: frozenset  # pair indices clamped at the cap
    overflow_rate: float  # fraction of pre-clamp targets above the cap
    cv: float


def total_budget(cap: int, frame_count: int, r_t: float) -> int:
    """B_tot = round(K * T * (1 - r_t)), bounded by the aggregate cap."""
    if frame_count < 2:
        raise ValidationError(f"need at least 2 frames, got {frame_count}")
    if cap < 1:
        raise ValidationError(f"per-frame token count must be >= 1, got {cap}")
    if not 0.0 <= r_t <= 1.0:
        raise ValidationError(f"temporal retention must be in [0, 1], got {r_t}")
    b_tot = round_half_up(cap * frame_count * (1.0 - r_t))
    limit = (frame_count - 1) * cap
    if b_tot > limit:
        raise ValidationError(
            f"budget {b_tot} exceeds the aggregate cap {limit}; "
            "configuration is infeasible"
        )
    return b_tot


def _softmax_neg(w: np.ndarray, tau_b: float) -> np.ndarray:
    z = -w / tau_b
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def largest_remainder(targets: np.ndarray, total: int) -> np.ndarray:
    """Round nonnegative real targets to integers summing to ``total``.

    Floors first, then hands out the leftover units by descending
    fractional remainder, ties to the lower index.
    """
    floors = np.floor(targets).astype(np.int64)
    leftover = total - int(floors.sum())
    remainders = targets - floors
    order = np.lexsort((np.arange(len(targets)), -remainders))
    floors[order[:leftover]] += 1
    return floors


def allocate(
    difficulties: np.ndarray, b_tot: int, cap: int, tau_b: float
) -> BudgetAllocation:
    """Distribute b_tot over pairs by softmax(-W/tau_b) under the cap."""
    if tau_b <= 0:
        raise ValidationError(f"budget temperature must be positive, got {tau_b}")
    w = np.asarray(difficulties, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValidationError("difficulties must be finite")
    n = len(w)
    if b_tot > n * cap:
        raise ValidationError(f"budget {b_tot} exceeds aggregate cap {n * cap}")

    beta = _softmax_neg(w, tau_b)
    overflow_rate = float(np.mean(beta * b_tot > cap))

    budgets = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    remaining = b_tot
    while True:
        assert active.any() or remaining == 0, "all pairs frozen with residual budget"
        if remaining == 0:
            break
        idx = np.flatnonzero(active)
        targets = _softmax_neg(w[idx], tau_b) * remaining
        ints = largest_remainder(targets, remaining)
        over = ints > cap
        if not over.any():
            budgets[idx] = ints
            break
        # Freeze every overflowing pair at the cap in the same round.
        budgets[idx[over]] = cap
        active[idx[over]] = False
        remaining -= int(over.sum()) * cap

    frozen = frozenset(int(i) for i in np.flatnonzero(~active))
    uniform = b_tot / n
    ratios = budgets / uniform if uniform > 0 else np.ones(n)
    mean = budgets.mean()
    cv = float(budgets.std() / mean) if mean > 0 else 0.0
    return BudgetAllocation(
        total=b_tot,
        budgets=budgets,
        cap=cap,
        weights=beta,
        ratios=np.asarray(ratios, dtype=np.float64),
        frozen=frozen,
        overflow_rate=overflow_rate,
        cv=cv,
    )


def overflow_threshold(frame_count: int, r_t: float) -> float:
    """Budget ratio above which a pair would exceed its cap:
    (T-1) / (T * (1 - r_t))."""
    if frame_count < 2:
        raise ValidationError(f"need at least 2 frames, got {frame_count}")
    if not 0.0 < r_t < 1.0:
        raise ValidationError(
            f"temporal retention must be in (0, 1) for a finite threshold, got {r_t}"
        )
    return (frame_count - 1) / (frame_count * (1.0 - r_t))


def budget_stats(allocation: BudgetAllocation, bins: int = 10) -> dict:
    """Diagnostics: coefficient of variation, ratio histogram, overflow rate."""
    counts, edges = np.histogram(allocation.ratios, bins=bins)
    return {
        "cv": allocation.cv,
        "ratio_histogram": {
            "counts": counts.tolist(),
            "edges": edges.tolist(),
        },
        "overflow_rate": allocation.overflow_rate,
    }
