"""Merge/prune execution over the global cross-frame match graph.

Per pair, the highest-coupling entries become edges from frame t+1
(source) into frame t (destination), each source used at most once.
Edges below the cost threshold merge, the rest prune; chains spanning
many pairs are collapsed with union-find and averaged into their
earliest member.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spatial import RetainedFrame
from .transport import PairTransport


@dataclass(frozen=True)
class CompressionEdge:
    pair_index: int
    source: int  # retained-slot index in frame t+1
    destination: int  # retained-slot index in frame t
    coupling: float
    cost: float
    kind: str  # "merge" | "prune"


@dataclass(frozen=True)
class CompressedSequence:
    """Final survivor set in frame-major order.

    ``token_ids`` are (frame, original token index) pairs; ``components``
    maps each survivor to the members averaged into it (itself included).
    """

    token_ids: list  # [(frame, original_index), ...]
    features: np.ndarray  # (S, d)
    components: dict  # (frame, original_index) -> [(frame, original_index), ...]
    executed_edges: int


def select_matches(
    transport: PairTransport, b_t: int, tau_c: float
) -> list[CompressionEdge]:
    """Top-B_t coupling entries under the source-once constraint.

    Entries are scanned in descending coupling order, ties resolved by
    lower source then lower destination index.
    """
    plan = transport.plan
    k_dst, k_src = plan.shape
    if b_t > k_src:
        raise ValidationError(f"budget {b_t} exceeds {k_src} available sources")
    if b_t == 0:
        return []
    dst_idx, src_idx = np.divmod(np.arange(plan.size), k_src)
    order = np.lexsort((dst_idx, src_idx, -plan.ravel()))
    edges: list[CompressionEdge] = []
    used_sources = np.zeros(k_src, dtype=bool)
    for flat in order:
        j = int(src_idx[flat])
        if used_sources[j]:
            continue
        i = int(dst_idx[flat])
        cost = float(transport.cost[i, j])
        edges.append(
            CompressionEdge(
                pair_index=transport.pair_index,
                source=j,
                destination=i,
                coupling=float(plan[i, j]),
                cost=cost,
                kind="merge" if cost < tau_c else "prune",
            )
        )
        used_sources[j] = True
        if len(edges) == b_t:
            break
    return edges


class _UnionFind:
    """Union-find keeping the smallest element as each set's root."""

    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while self.parent.get(x, x) != x:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra


def resolve_graph(
    edges: list[CompressionEdge], frames: list[RetainedFrame]
) -> CompressedSequence:
    """Collapse the global edge set into the final token sequence.

    Prune edges delete their source. A merge whose destination was
    already deleted degrades to a prune (prune wins), so every edge
    removes exactly one token. Surviving components are averaged into
    their smallest (frame, slot) member.
    """
    by_pair: dict[int, list[CompressionEdge]] = {}
    for edge in edges:
        by_pair.setdefault(edge.pair_index, []).append(edge)
    for pair_edges in by_pair.values():
        sources = [e.source for e in pair_edges]
        if len(sources) != len(set(sources)):
            raise ValidationError("a source token appears in multiple edges of one pair")

    dead: set = set()
    uf = _UnionFind()
    executed = 0
    # Forward pass: deadness of a destination (frame t) is settled by the
    # time pair t is processed.
    for t in sorted(by_pair):
        for edge in by_pair[t]:
            src = (t + 1, edge.source)
            dst = (t, edge.destination)
            executed += 1
            if edge.kind == "prune" or dst in dead:
                dead.add(src)
            else:
                uf.union(src, dst)

    members: dict = {}
    for frame in frames:
        t = frame.frame_index
        for slot in range(len(frame.selected_indices)):
            token = (t, slot)
            if token in dead:
                continue
            members.setdefault(uf.find(token), []).append(token)

    def original_id(token):
        t, slot = token
        return (t, int(frames[t].selected_indices[slot]))

    token_ids = []
    features = []
    components = {}
    for root in sorted(members):
        group = members[root]
        token_ids.append(original_id(root))
        features.append(
            np.mean([frames[t].features[slot] for t, slot in group], axis=0)
        )
        components[original_id(root)] = [original_id(tok) for tok in group]
    return CompressedSequence(
        token_ids=token_ids,
        features=np.asarray(features) if features else np.empty((0, frames[0].features.shape[1])),
        components=components,
        executed_edges=executed,
    )


def compression_ratio(
    sequence: CompressedSequence, frame_count: int, tokens_per_frame: int
) -> float:
    """Achieved retention: survivors over the original token count."""
    return len(sequence.token_ids) / (frame_count * tokens_per_frame)
