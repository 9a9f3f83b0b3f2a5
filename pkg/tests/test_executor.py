import numpy as np
import pytest

from ottv.errors import ValidationError
from ottv.executor import (
    CompressionEdge,
    compression_ratio,
    resolve_graph,
    select_matches,
)
from ottv.spatial import RetainedFrame
from ottv.transport import PairTransport


def make_transport(plan, cost, pair_index=0):
    plan = np.asarray(plan, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    return PairTransport(
        pair_index=pair_index,
        cost=cost,
        alpha=0.5,
        plan=plan,
        difficulty=float((plan * cost).sum()),
        converged=True,
        iterations=1,
    )


def make_frame(t, features, indices=None):
    features = np.asarray(features, dtype=np.float64)
    k = features.shape[0]
    if indices is None:
        indices = np.arange(k)
    return RetainedFrame(
        frame_index=t,
        selected_indices=np.asarray(indices, dtype=np.int64),
        features=features,
        mass=np.full(k, 1.0 / k),
        positions=np.zeros((k, 2), dtype=np.int64),
    )


class TestSelectMatches:
    def test_zero_budget(self):
        transport = make_transport(np.full((2, 2), 0.25), np.zeros((2, 2)))
        assert select_matches(transport, 0, tau_c=0.3) == []

    def test_source_once_greedy_trace(self):
        # Descending couplings: 0.4 (i0,j0) accepted, 0.3 (i1,j0) skipped
        # because source 0 is used, 0.2 (i1,j1) accepted.
        transport = make_transport([[0.4, 0.1], [0.3, 0.2]], np.zeros((2, 2)))
        edges = select_matches(transport, 2, tau_c=0.3)
        assert [(e.source, e.destination) for e in edges] == [(0, 0), (1, 1)]

    def test_tie_breaks_by_source_then_destination(self):
        transport = make_transport(np.full((2, 2), 0.25), np.zeros((2, 2)))
        edges = select_matches(transport, 2, tau_c=0.3)
        assert [(e.source, e.destination) for e in edges] == [(0, 0), (1, 0)]

    def test_cost_threshold_labels_kinds(self):
        cost = np.array([[0.1, 1.5], [1.5, 0.1]])
        transport = make_transport(np.diag([0.5, 0.5]) + 0.001, cost)
        edges = select_matches(transport, 2, tau_c=0.3)
        assert all(e.kind == "merge" for e in edges)
        edges = select_matches(transport, 2, tau_c=0.05)
        assert all(e.kind == "prune" for e in edges)

    def test_budget_above_source_count_rejected(self):
        transport = make_transport(np.full((2, 2), 0.25), np.zeros((2, 2)))
        with pytest.raises(ValidationError):
            select_matches(transport, 3, tau_c=0.3)


class TestResolveGraph:
    def test_no_edges_is_identity(self):
        frames = [make_frame(0, np.eye(2)), make_frame(1, np.eye(2) * 2)]
        seq = resolve_graph([], frames)
        assert seq.token_ids == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert np.allclose(seq.features, np.vstack([np.eye(2), np.eye(2) * 2]))
        assert all(len(members) == 1 for members in seq.components.values())

    def test_three_chain_merge_averages_uniformly(self):
        frames = [
            make_frame(0, [[1.0, 0.0]], indices=[5]),
            make_frame(1, [[0.0, 1.0]], indices=[5]),
            make_frame(2, [[1.0, 1.0]], indices=[5]),
        ]
        edges = [
            CompressionEdge(0, source=0, destination=0, coupling=1.0, cost=0.0, kind="merge"),
            CompressionEdge(1, source=0, destination=0, coupling=1.0, cost=0.0, kind="merge"),
        ]
        seq = resolve_graph(edges, frames)
        assert seq.token_ids == [(0, 5)]
        assert np.allclose(seq.features[0], [2 / 3, 2 / 3])
        assert seq.components[(0, 5)] == [(0, 5), (1, 5), (2, 5)]

    def test_merge_then_prune(self):
        frames = [
            make_frame(0, [[2.0, 0.0]]),  # A
            make_frame(1, [[0.0, 2.0]]),  # B
            make_frame(2, [[1.0, 1.0]]),  # C
        ]
        edges = [
            CompressionEdge(0, 0, 0, coupling=1.0, cost=0.0, kind="merge"),  # B -> A
            CompressionEdge(1, 0, 0, coupling=1.0, cost=1.9, kind="prune"),  # C pruned
        ]
        seq = resolve_graph(edges, frames)
        assert seq.token_ids == [(0, 0)]
        assert np.allclose(seq.features[0], [1.0, 1.0])  # (A + B) / 2

    def test_prune_wins_over_later_merge(self):
        # B pruned by pair 0; the pair-1 merge into B degrades to a prune
        # of C so each edge still removes exactly one token.
        frames = [
            make_frame(0, [[1.0, 0.0]]),  # A
            make_frame(1, [[0.0, 1.0]]),  # B
            make_frame(2, [[1.0, 1.0]]),  # C
        ]
        edges = [
            CompressionEdge(0, 0, 0, coupling=1.0, cost=1.9, kind="prune"),
            CompressionEdge(1, 0, 0, coupling=1.0, cost=0.0, kind="merge"),
        ]
        seq = resolve_graph(edges, frames)
        assert seq.token_ids == [(0, 0)]
        assert np.allclose(seq.features[0], [1.0, 0.0])  # A untouched
        assert seq.executed_edges == 2

    def test_all_prune_keeps_features_unchanged(self):
        rng = np.random.default_rng(0)
        frames = [make_frame(t, rng.standard_normal((3, 4))) for t in range(2)]
        edges = [
            CompressionEdge(0, 0, 0, coupling=0.5, cost=1.9, kind="prune"),
            CompressionEdge(0, 1, 2, coupling=0.4, cost=1.9, kind="prune"),
        ]
        seq = resolve_graph(edges, frames)
        assert seq.token_ids == [(0, 0), (0, 1), (0, 2), (1, 2)]
        expected = np.vstack([frames[0].features, frames[1].features[2:]])
        assert np.allclose(seq.features, expected)

    def test_many_to_one_destination(self):
        frames = [make_frame(0, [[1.0, 0.0], [0.0, 1.0]]),
                  make_frame(1, [[3.0, 0.0], [0.0, 3.0]])]
        edges = [
            CompressionEdge(0, 0, 0, coupling=0.5, cost=0.0, kind="merge"),
            CompressionEdge(0, 1, 0, coupling=0.4, cost=0.0, kind="merge"),
        ]
        seq = resolve_graph(edges, frames)
        assert seq.token_ids == [(0, 0), (0, 1)]
        assert np.allclose(seq.features[0], [4 / 3, 1.0])

    def test_duplicate_source_in_pair_rejected(self):
        frames = [make_frame(0, np.eye(2)), make_frame(1, np.eye(2))]
        edges = [
            CompressionEdge(0, 0, 0, coupling=0.5, cost=0.0, kind="merge"),
            CompressionEdge(0, 0, 1, coupling=0.4, cost=0.0, kind="merge"),
        ]
        with pytest.raises(ValidationError, match="source"):
            resolve_graph(edges, frames)

    def test_survivor_count_identity_random(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            T = int(rng.integers(2, 6))
            k = int(rng.integers(2, 6))
            frames = [make_frame(t, rng.standard_normal((k, 3))) for t in range(T)]
            edges = []
            for t in range(T - 1):
                budget = int(rng.integers(0, k + 1))
                sources = rng.permutation(k)[:budget]
                for j in sources:
                    edges.append(
                        CompressionEdge(
                            t,
                            source=int(j),
                            destination=int(rng.integers(0, k)),
                            coupling=float(rng.random()),
                            cost=float(rng.random() * 2),
                            kind=rng.choice(["merge", "prune"]),
                        )
                    )
            seq = resolve_graph(edges, frames)
            assert len(seq.token_ids) == T * k - len(edges)
            assert seq.executed_edges == len(edges)

    def test_averaging_idempotent_under_re_resolution(self):
        rng = np.random.default_rng(7)
        frames = [make_frame(t, rng.standard_normal((4, 3))) for t in range(3)]
        edges = [
            CompressionEdge(0, 1, 2, coupling=0.5, cost=0.0, kind="merge"),
            CompressionEdge(1, 2, 1, coupling=0.5, cost=0.0, kind="merge"),
        ]
        seq_a = resolve_graph(edges, frames)
        seq_b = resolve_graph(list(reversed(edges)), frames)
        assert seq_a.token_ids == seq_b.token_ids
        assert np.allclose(seq_a.features, seq_b.features)
        assert seq_a.components == seq_b.components


class TestCompressionRatio:
    def test_identity(self):
        frames = [make_frame(0, np.eye(3))]
        seq = resolve_graph([], frames)
        assert compression_ratio(seq, 1, 3) == 1.0

    def test_partial(self):
        frames = [make_frame(0, np.eye(4)), make_frame(1, np.eye(4))]
        edges = [CompressionEdge(0, 0, 0, 0.5, 1.9, "prune")]
        seq = resolve_graph(edges, frames)
        assert compression_ratio(seq, 2, 8) == pytest.approx(7 / 16)
