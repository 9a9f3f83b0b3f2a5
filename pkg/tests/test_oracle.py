import numpy as np
import pytest

from ottv.errors import ValidationError
from ottv.oracle import (
    brute_force_selection,
    exact_ot,
    northwest_corner,
)
from ottv.transport import sinkhorn


class TestExactOT:
    def test_zero_cost_any_feasible_plan(self):
        a = np.array([0.5, 0.5])
        b = np.array([0.25, 0.75])
        result = exact_ot(a, b, np.zeros((2, 2)))
        assert result.objective == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(result.plan.sum(axis=1), a, atol=1e-9)
        assert np.allclose(result.plan.sum(axis=0), b, atol=1e-9)

    def test_permutation_cost_picks_the_matching(self):
        a = np.full(3, 1 / 3)
        cost = 1.0 - np.eye(3)
        result = exact_ot(a, a, cost)
        assert result.objective == pytest.approx(0.0, abs=1e-10)
        assert np.allclose(result.plan, np.eye(3) / 3, atol=1e-9)

    def test_single_point(self):
        result = exact_ot(np.array([1.0]), np.array([1.0]), np.array([[0.7]]))
        assert result.objective == pytest.approx(0.7)

    def test_size_limit(self):
        a = np.full(9, 1 / 9)
        with pytest.raises(ValidationError):
            exact_ot(a, a, np.zeros((9, 9)))

    def test_rejects_zero_mass(self):
        with pytest.raises(ValidationError):
            exact_ot(np.array([1.0, 0.0]), np.array([0.5, 0.5]), np.zeros((2, 2)))

    def test_sinkhorn_never_beats_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            k = int(rng.integers(2, 8))
            a = rng.random(k) + 0.1
            a /= a.sum()
            b = rng.random(k) + 0.1
            b /= b.sum()
            cost = rng.random((k, k)) * 2
            plan, _, _, _ = sinkhorn(a, b, cost, 0.01, max_iters=3000, tol=1e-9)
            approx = float((plan * cost).sum())
            exact = exact_ot(a, b, cost).objective
            assert approx >= exact - 1e-8


class TestNorthwestCorner:
    def test_feasibility(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(1, 8))
            m = int(rng.integers(1, 8))
            a = rng.random(n) + 0.1
            a /= a.sum()
            b = rng.random(m) + 0.1
            b /= b.sum()
            plan = northwest_corner(a, b)
            assert np.allclose(plan.sum(axis=1), a, atol=1e-12)
            assert np.allclose(plan.sum(axis=0), b, atol=1e-12)
            assert np.all(plan >= 0)

    def test_upper_bounds_the_exact_objective(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            k = int(rng.integers(2, 8))
            a = rng.random(k) + 0.1
            a /= a.sum()
            b = rng.random(k) + 0.1
            b /= b.sum()
            cost = rng.random((k, k)) * 2
            feasible = float((northwest_corner(a, b) * cost).sum())
            assert feasible >= exact_ot(a, b, cost).objective - 1e-9


class TestBruteForceSelection:
    def test_full_coverage_when_k_equals_n(self):
        rng = np.random.default_rng(6)
        feats = rng.standard_normal((3, 4))
        sal = rng.dirichlet(np.ones(3))
        subset, value = brute_force_selection(feats, sal, 3)
        assert subset == (0, 1, 2)
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_k1_orthonormal_picks_argmax_saliency(self):
        sal = np.array([0.1, 0.2, 0.4, 0.3])
        subset, value = brute_force_selection(np.eye(4), sal, 1)
        assert subset == (2,)
        assert value == pytest.approx(0.4)

    def test_limits(self):
        feats = np.random.default_rng(0).standard_normal((11, 3))
        with pytest.raises(ValidationError):
            brute_force_selection(feats, np.full(11, 1 / 11), 2)
        with pytest.raises(ValidationError):
            brute_force_selection(feats[:5], np.full(5, 0.2), 4)
