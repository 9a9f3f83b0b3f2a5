"""Per-frame token selection and transport-mass assignment.

The default strategy greedily maximizes saliency-weighted coverage and
derives mass from leave-one-out coverage loss; four alternative
selection/mass pairings are provided for ablation. All strategies share
the same negative-softmax mass temperature and break ties by lowest
index.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

STRATEGIES = ("ours", "topk", "divprune", "adts", "scope")


@dataclass(frozen=True)
class RetainedFrame:
    """K tokens kept from one frame, in selection order.

    ``mass`` is strictly positive and sums to 1; ``positions`` holds the
    (row, col) grid coordinates of the selected tokens.
    """

    frame_index: int
    selected_indices: np.ndarray  # (K,) original token indices
    features: np.ndarray  # (K, d)
    mass: np.ndarray  # (K,)
    positions: np.ndarray  # (K, 2)


def retention_split(r: float, gamma: float) -> tuple[float, float]:
    """Split overall retention r into spatial and temporal factors.

    r_s = r**(1-gamma), r_t = r**gamma, so r_s * r_t == r.
    """
    if not 0.0 < r <= 1.0:
        raise ValidationError(f"retention ratio must be in (0, 1], got {r}")
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"temporal share must be in [0, 1], got {gamma}")
    return r ** (1.0 - gamma), r ** gamma


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def tokens_to_keep(tokens_per_frame: int, r_s: float) -> int:
    """K = round(N_v * r_s), floored at 1."""
    return max(1, round_half_up(tokens_per_frame * r_s))


def _cosine_matrix(features: np.ndarray) -> np.ndarray:
    unit = features / np.linalg.norm(features, axis=1, keepdims=True)
    return unit @ unit.T


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise ValidationError(f"K={k} out of range for {n} tokens")


def select_ours(features: np.ndarray, saliency: np.ndarray, k: int) -> np.ndarray:
    """Greedy saliency-weighted coverage maximization.

    gain(j) = sum_i w_i * max(0, cos(i, j) - mu_i) with mu the running
    best coverage of each token; mu starts at zero and is updated after
    every pick.
    """
    n = features.shape[0]
    _check_k(k, n)
    sims = _cosine_matrix(features)
    mu = np.zeros(n)
    selected: list[int] = []
    available = np.ones(n, dtype=bool)
    for _ in range(k):
        gains = saliency @ np.maximum(0.0, sims - mu[:, None])
        gains[~available] = -np.inf
        pick = int(np.argmax(gains))  # argmax takes the lowest index on ties
        selected.append(pick)
        available[pick] = False
        mu = np.maximum(mu, sims[:, pick])
    return np.asarray(selected, dtype=np.int64)


def _top2_to_selected(sims_to_sel: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best and second-best similarity of each token to the selected set.

    Returns (sigma1, sigma2, khat) where khat is the selection-slot index
    of the best match (lowest slot on ties). Requires K >= 2.
    """
    khat = np.argmax(sims_to_sel, axis=1)
    sigma1 = sims_to_sel[np.arange(len(khat)), khat]
    masked = sims_to_sel.copy()
    masked[np.arange(len(khat)), khat] = -np.inf
    sigma2 = masked.max(axis=1)
    return sigma1, sigma2, khat


def _negative_softmax_mass(u: np.ndarray, tau_m: float) -> np.ndarray:
    """Normalize scores by their max, then softmax(-u~/tau_m).

    A zero score vector (no token is irreplaceable) falls back to uniform
    mass.
    """
    if tau_m <= 0:
        raise ValidationError(f"mass temperature must be positive, got {tau_m}")
    u_max = u.max()
    u_tilde = u / u_max if u_max > 0 else np.zeros_like(u)
    z = -u_tilde / tau_m
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def mass_ours(
    features: np.ndarray,
    saliency: np.ndarray,
    selected: np.ndarray,
    tau_m: float,
) -> np.ndarray:
    """Leave-one-out mass: aggregate saliency-weighted top-2 similarity gaps.

    u_k sums w_i * max(0, sigma1_i - sigma2_i) over tokens whose best
    match is selected slot k; mass is the shared negative softmax of the
    max-normalized scores.
    """
    k = len(selected)
    if k == 0:
        raise ValidationError("selection is empty")
    if k == 1:
        warnings.warn(
            "single retained token: second-best similarity undefined, mass is (1.0)",
            stacklevel=2,
        )
        return np.ones(1)
    sims = _cosine_matrix(features)[:, selected]
    sigma1, sigma2, khat = _top2_to_selected(sims)
    gaps = saliency * np.maximum(0.0, sigma1 - sigma2)
    u = np.bincount(khat, weights=gaps, minlength=k)
    return _negative_softmax_mass(u, tau_m)


def _select_topk(features, saliency, k):
    order = np.lexsort((np.arange(len(saliency)), -saliency))
    return order[:k].astype(np.int64)


def _select_maxmin(features, saliency, k, scale_by_saliency):
    """Farthest-point sampling on cosine distance; first pick uses the
    distance to all other tokens. ADTS scales each candidate's distance by
    its own saliency."""
    n = features.shape[0]
    dist = 1.0 - _cosine_matrix(features)
    weight = saliency if scale_by_saliency else np.ones(n)
    off_diag = dist + np.where(np.eye(n, dtype=bool), np.inf, 0.0)
    first_scores = weight * off_diag.min(axis=1)
    selected = [int(np.argmax(first_scores))]
    available = np.ones(n, dtype=bool)
    available[selected[0]] = False
    for _ in range(k - 1):
        scores = weight * dist[:, selected].min(axis=1)
        scores[~available] = -np.inf
        pick = int(np.argmax(scores))
        selected.append(pick)
        available[pick] = False
    return np.asarray(selected, dtype=np.int64)


def _select_scope(features, saliency, k):
    """Greedy coverage with the gain scaled by the candidate's saliency."""
    n = features.shape[0]
    sims = _cosine_matrix(features)
    cur_max = np.zeros(n)
    selected: list[int] = []
    available = np.ones(n, dtype=bool)
    for _ in range(k):
        gains = saliency * np.maximum(0.0, sims - cur_max[:, None]).sum(axis=0)
        gains[~available] = -np.inf
        pick = int(np.argmax(gains))
        selected.append(pick)
        available[pick] = False
        cur_max = np.maximum(cur_max, sims[:, pick])
    return np.asarray(selected, dtype=np.int64)


def _variant_scores(strategy, features, saliency, selected):
    """Per-slot score mirroring each strategy's selection criterion."""
    k = len(selected)
    if strategy == "topk":
        return saliency[selected]
    if strategy in ("divprune", "adts"):
        dist = 1.0 - _cosine_matrix(features[selected])
        np.fill_diagonal(dist, np.inf)
        iso = dist.min(axis=1)
        if strategy == "adts":
            iso = saliency[selected] * iso
        return iso
    if strategy == "scope":
        sims = _cosine_matrix(features)[:, selected]
        sigma1, sigma2, khat = _top2_to_selected(sims)
        gaps = np.maximum(0.0, sigma1 - sigma2)
        return saliency[selected] * np.bincount(khat, weights=gaps, minlength=k)
    raise ValidationError(f"unknown strategy {strategy!r}")


def select_and_mass(
    strategy: str,
    features: np.ndarray,
    saliency: np.ndarray,
    k: int,
    tau_m: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Run one strategy's selection and its mirrored mass function."""
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    n = features.shape[0]
    _check_k(k, n)
    if strategy == "ours":
        selected = select_ours(features, saliency, k)
        return selected, mass_ours(features, saliency, selected, tau_m)
    if strategy == "topk":
        selected = _select_topk(features, saliency, k)
    elif strategy == "divprune":
        selected = _select_maxmin(features, saliency, k, scale_by_saliency=False)
    elif strategy == "adts":
        selected = _select_maxmin(features, saliency, k, scale_by_saliency=True)
    else:
        selected = _select_scope(features, saliency, k)
    if k == 1:
        warnings.warn(
            "single retained token: mass is (1.0)",
            stacklevel=2,
        )
        return selected, np.ones(1)
    return selected, _negative_softmax_mass(
        _variant_scores(strategy, features, saliency, selected), tau_m
    )


def retain_frame(
    frame_index: int,
    features: np.ndarray,
    saliency: np.ndarray,
    grid_positions: np.ndarray,
    k: int,
    strategy: str,
    tau_m: float,
) -> RetainedFrame:
    selected, mass = select_and_mass(strategy, features, saliency, k, tau_m)
    return RetainedFrame(
        frame_index=frame_index,
        selected_indices=selected,
        features=features[selected],
        mass=mass,
        positions=grid_positions[selected],
    )


def facility_location_value(
    features: np.ndarray, saliency: np.ndarray, subset
) -> float:
    """Saliency-weighted coverage objective of a subset (test oracle hook)."""
    sims = _cosine_matrix(features)[:, list(subset)]
    return float(saliency @ np.maximum(0.0, sims.max(axis=1)))
