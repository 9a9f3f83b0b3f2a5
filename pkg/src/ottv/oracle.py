"""Independent brute-force verifiers used by the test suite.

Exact (unregularized) transport via linear programming and exhaustive
subset search for the coverage objective. Nothing here shares code with
the production solver or the greedy selector.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .errors import ValidationError

MAX_EXACT_OT_SIZE = 8
MAX_BRUTE_FORCE_TOKENS = 10
MAX_BRUTE_FORCE_K = 3


@dataclass(frozen=True)
class ExactOTResult:
    plan: np.ndarray
    objective: float


def exact_ot(m_src: np.ndarray, m_dst: np.ndarray, cost: np.ndarray) -> ExactOTResult:
    """Exact minimizer of <P, C> over the transportation polytope."""
    m_src = np.asarray(m_src, dtype=np.float64)
    m_dst = np.asarray(m_dst, dtype=np.float64)
    n, m = len(m_src), len(m_dst)
    if n > MAX_EXACT_OT_SIZE or m > MAX_EXACT_OT_SIZE:
        raise ValidationError(f"exact OT limited to K <= {MAX_EXACT_OT_SIZE}")
    if np.any(m_src <= 0) or np.any(m_dst <= 0):
        raise ValidationError("degenerate (zero) masses rejected")

    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([m_src, m_dst])
    # One marginal constraint is redundant; dropping it keeps the system
    # full rank for the solver.
    result = linprog(
        cost.ravel(), A_eq=a_eq[:-1], b_eq=b_eq[:-1], bounds=(0, None), method="highs"
    )
    if not result.success:
        raise ValidationError(f"LP solve failed: {result.message}")
    plan = result.x.reshape(n, m)
    return ExactOTResult(plan=plan, objective=float(result.fun))


def brute_force_selection(
    features: np.ndarray, saliency: np.ndarray, k: int
) -> tuple[tuple, float]:
    """Exhaustive maximizer of the saliency-weighted coverage objective."""
    n = features.shape[0]
    if n > MAX_BRUTE_FORCE_TOKENS or k > MAX_BRUTE_FORCE_K:
        raise ValidationError(
            f"brute force limited to N_v <= {MAX_BRUTE_FORCE_TOKENS}, "
            f"K <= {MAX_BRUTE_FORCE_K}"
        )
    unit = features / np.linalg.norm(features, axis=1, keepdims=True)
    sims = unit @ unit.T
    best_subset: tuple = ()
    best_value = -np.inf
    for subset in combinations(range(n), k):
        value = float(saliency @ np.maximum(0.0, sims[:, subset].max(axis=1)))
        if value > best_value:
            best_value = value
            best_subset = subset
    return best_subset, best_value


def northwest_corner(m_src: np.ndarray, m_dst: np.ndarray) -> np.ndarray:
    """Feasible (generally suboptimal) plan used as an upper-bound witness."""
    n, m = len(m_src), len(m_dst)
    plan = np.zeros((n, m))
    row, col = m_src.astype(np.float64).copy(), m_dst.astype(np.float64).copy()
    i = j = 0
    while i < n and j < m:
        move = min(row[i], col[j])
        plan[i, j] = move
        row[i] -= move
        col[j] -= move
        if row[i] <= col[j]:
            i += 1
        else:
            j += 1
    return plan
